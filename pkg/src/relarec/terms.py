"""TF-IDF inverted index with MoreLikeThis-style query-by-document."""

from __future__ import annotations

import json
import math
import zlib
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .corpus import Document
from .textpipe import DEFAULT_STOPWORDS, analyze

INDEX_MAGIC = b"RLRX"
INDEX_VERSION = 1


@dataclass(frozen=True)
class MoreLikeThisParams:
    min_term_freq: int = 2
    min_doc_freq: int = 5
    max_query_terms: int = 25

    def __post_init__(self) -> None:
        for name in ("min_term_freq", "min_doc_freq", "max_query_terms"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class InvertedIndex:
    """Postings keyed by term, plus a forward view for query-term selection."""

    postings: dict[str, dict[str, int]] = field(default_factory=dict)
    field_length: dict[str, int] = field(default_factory=dict)
    doc_count: int = 0
    _forward: dict[str, dict[str, int]] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self._forward = {d: {} for d in self.field_length}
        for term, postings in self.postings.items():
            for doc_id, tf in postings.items():
                self._forward[doc_id][term] = tf

    @classmethod
    def from_term_counts(
        cls, counts: Mapping[str, Mapping[str, int]], doc_count: int | None = None
    ) -> "InvertedIndex":
        postings: dict[str, dict[str, int]] = {}
        field_length = {}
        for doc_id, terms in counts.items():
            field_length[doc_id] = sum(terms.values())
            for term in sorted(terms):
                postings.setdefault(term, {})[doc_id] = terms[term]
        return cls(postings, field_length, len(counts) if doc_count is None else doc_count)

    def doc_freq(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def term_freq(self, term: str, doc_id: str) -> int:
        return self.postings.get(term, {}).get(doc_id, 0)

    def doc_terms(self, doc_id: str) -> dict[str, int]:
        return self._forward.get(doc_id, {})

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self.field_length

    # persistence

    def to_dict(self) -> dict:
        return {
            "doc_count": self.doc_count,
            "field_length": self.field_length,
            "postings": self.postings,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "InvertedIndex":
        return cls(
            postings={t: dict(p) for t, p in data["postings"].items()},
            field_length=dict(data["field_length"]),
            doc_count=data["doc_count"],
        )


def write_blob(path: str | Path, payload: dict, magic: bytes = INDEX_MAGIC, version: int = INDEX_VERSION) -> None:
    body = zlib.compress(json.dumps(payload, sort_keys=True).encode("utf-8"))
    with open(path, "wb") as fh:
        fh.write(magic + version.to_bytes(2, "little") + body)


def read_blob(path: str | Path, magic: bytes = INDEX_MAGIC, version: int = INDEX_VERSION) -> dict:
    raw = Path(path).read_bytes()
    if raw[: len(magic)] != magic:
        raise ValueError(f"{path}: not an index file")
    found = int.from_bytes(raw[len(magic) : len(magic) + 2], "little")
    if found != version:
        raise ValueError(f"{path}: unsupported index version {found}")
    return json.loads(zlib.decompress(raw[len(magic) + 2 :]))


def save_index(index: InvertedIndex, path: str | Path) -> None:
    write_blob(path, index.to_dict())


def load_index(path: str | Path) -> InvertedIndex:
    return InvertedIndex.from_dict(read_blob(path))


def document_stems(
    doc: Document, include_keywords: bool = False, stopwords: frozenset[str] = DEFAULT_STOPWORDS
) -> list[str]:
    fields = [doc.title, doc.abstract]
    if include_keywords:
        fields.extend(doc.keywords)
    return analyze(*fields, stopwords=stopwords).stems


def build_index(
    docs: Iterable[Document],
    include_keywords: bool = False,
    stopwords: frozenset[str] = DEFAULT_STOPWORDS,
) -> InvertedIndex:
    counts = {d.doc_id: Counter(document_stems(d, include_keywords, stopwords)) for d in docs}
    if not counts:
        raise ValueError("nothing to index")
    return InvertedIndex.from_term_counts(counts)


def idf(doc_freq: int, doc_count: int) -> float:
    return 1.0 + math.log(doc_count / (doc_freq + 1))


def tf_idf(term: str, doc_id: str, index: InvertedIndex) -> float:
    """sqrt(tf) * idf**2; the idf appears twice because it weights query and document."""
    tf = index.term_freq(term, doc_id)
    if tf == 0:
        return 0.0
    w = idf(index.doc_freq(term), index.doc_count)
    return math.sqrt(tf) * (w * w)


def select_query_terms(
    doc_id: str, index: InvertedIndex, params: MoreLikeThisParams = MoreLikeThisParams()
) -> list[tuple[str, float]]:
    """The document's most distinctive stems, highest tf-idf first."""
    candidates = []
    for term, tf in index.doc_terms(doc_id).items():
        if tf < params.min_term_freq or index.doc_freq(term) < params.min_doc_freq:
            continue
        candidates.append((term, tf_idf(term, doc_id, index)))
    candidates.sort(key=lambda tw: (-tw[1], tw[0]))
    return candidates[: params.max_query_terms]


def search(
    query_terms: Iterable[str], index: InvertedIndex, exclude: str | None = None, k: int | None = None
) -> list[tuple[str, float]]:
    """Disjunctive match: sum per-term tf-idf, then divide by sqrt(field length)."""
    scores: dict[str, float] = {}
    for term in query_terms:
        postings = index.postings.get(term)
        if not postings:
            continue
        w = idf(len(postings), index.doc_count)
        w2 = w * w
        for doc_id, tf in postings.items():
            if doc_id == exclude:
                continue
            scores[doc_id] = scores.get(doc_id, 0.0) + math.sqrt(tf) * w2
    ranked = [(d, s / math.sqrt(index.field_length[d])) for d, s in scores.items()]
    ranked.sort(key=lambda ds: (-ds[1], ds[0]))
    return ranked if k is None else ranked[:k]


def recommend_terms(
    doc_id: str,
    index: InvertedIndex,
    params: MoreLikeThisParams = MoreLikeThisParams(),
    k: int = 6,
) -> list[tuple[str, float]]:
    if k < 1:
        raise ValueError("k must be >= 1")
    query = select_query_terms(doc_id, index, params)
    if not query:
        return []
    return search([t for t, _ in query], index, exclude=doc_id, k=k)
