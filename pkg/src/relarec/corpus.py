"""File-backed document store.

Layout of a store directory::

    docs.jsonl    one accepted document per line, append-only
    offsets.json  doc_id -> [byte offset, byte length, corpus tag]

The store is written once by :meth:`CorpusStore.ingest` and read-only
afterwards.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

log = logging.getLogger(__name__)

DEFAULT_CORPUS_TAGS = frozenset({"sowiport", "core"})


class DocumentNotFound(KeyError):
    pass


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str
    abstract: str = ""
    keywords: tuple[str, ...] = ()
    corpus_tag: str = "sowiport"

    def to_record(self) -> dict:
        return {
            "id": self.doc_id,
            "title": self.title,
            "abstract": self.abstract,
            "keywords": list(self.keywords),
            "corpus": self.corpus_tag,
        }


@dataclass
class Rejection:
    line: int
    reason: str
    doc_id: str | None = None


@dataclass
class IngestSummary:
    accepted: int = 0
    rejected: int = 0
    rejections: list[Rejection] = field(default_factory=list)

    def as_dict(self) -> dict:
        return asdict(self)


def parse_record(raw: dict, corpus_tags: frozenset[str]) -> Document:
    """Validate one decoded ingestion record; raises ValueError with the reason."""
    if not isinstance(raw, dict):
        raise ValueError("record is not an object")
    doc_id = raw.get("id")
    if doc_id is None or (isinstance(doc_id, str) and not doc_id.strip()):
        raise ValueError("missing id")
    if not isinstance(doc_id, (str, int)):
        raise ValueError("id must be a string")
    title = raw.get("title")
    if not isinstance(title, str) or not title.strip():
        raise ValueError("missing title")
    abstract = raw.get("abstract") or ""
    if not isinstance(abstract, str):
        raise ValueError("abstract must be a string")
    keywords = raw.get("keywords") or []
    if not isinstance(keywords, list) or not all(isinstance(k, str) for k in keywords):
        raise ValueError("keywords must be an array of strings")
    tag = raw.get("corpus")
    if tag not in corpus_tags:
        raise ValueError(f"unknown corpus {tag!r}")
    return Document(str(doc_id), title, abstract, tuple(keywords), tag)


def _tag_filter(corpus_tags: Iterable[str] | str | None) -> frozenset[str] | None:
    if corpus_tags is None:
        return None
    return frozenset([corpus_tags] if isinstance(corpus_tags, str) else corpus_tags)


class CorpusStore:
    DATA_FILE = "docs.jsonl"
    OFFSETS_FILE = "offsets.json"

    def __init__(self, root: str | Path, corpus_tags: Iterable[str] = DEFAULT_CORPUS_TAGS):
        self.root = Path(root)
        self.corpus_tags = frozenset(corpus_tags)
        self._offsets: dict[str, tuple[int, int, str]] = {}
        offsets_path = self.root / self.OFFSETS_FILE
        if offsets_path.exists():
            with open(offsets_path, encoding="utf-8") as fh:
                self._offsets = {k: tuple(v) for k, v in json.load(fh).items()}

    @property
    def data_path(self) -> Path:
        return self.root / self.DATA_FILE

    def __len__(self) -> int:
        return len(self._offsets)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._offsets

    def ingest(self, lines: Iterable[str]) -> IngestSummary:
        """Append well-formed, previously unseen records; reject the rest."""
        self.root.mkdir(parents=True, exist_ok=True)
        summary = IngestSummary()
        with open(self.data_path, "ab") as out:
            offset = out.tell()
            for lineno, line in enumerate(lines, start=1):
                if not line.strip():
                    continue
                try:
                    doc = parse_record(json.loads(line), self.corpus_tags)
                except json.JSONDecodeError as exc:
                    summary.rejections.append(Rejection(lineno, f"malformed record: {exc.msg}"))
                    continue
                except ValueError as exc:
                    summary.rejections.append(Rejection(lineno, str(exc)))
                    continue
                if doc.doc_id in self._offsets:
                    summary.rejections.append(Rejection(lineno, "duplicate", doc.doc_id))
                    continue
                payload = (json.dumps(doc.to_record(), ensure_ascii=False) + "\n").encode("utf-8")
                out.write(payload)
                self._offsets[doc.doc_id] = (offset, len(payload), doc.corpus_tag)
                offset += len(payload)
                summary.accepted += 1
        summary.rejected = len(summary.rejections)
        with open(self.root / self.OFFSETS_FILE, "w", encoding="utf-8") as fh:
            json.dump(self._offsets, fh)
        log.info("ingested %d documents, rejected %d", summary.accepted, summary.rejected)
        return summary

    def ingest_file(self, path: str | Path) -> IngestSummary:
        with open(path, encoding="utf-8") as fh:
            return self.ingest(fh)

    def get(self, doc_id: str) -> Document:
        try:
            offset, length, _ = self._offsets[doc_id]
        except KeyError:
            raise DocumentNotFound(doc_id) from None
        with open(self.data_path, "rb") as fh:
            fh.seek(offset)
            raw = json.loads(fh.read(length).decode("utf-8"))
        return parse_record(raw, self.corpus_tags)

    def ids(self, corpus_tags: Iterable[str] | str | None = None) -> list[str]:
        wanted = _tag_filter(corpus_tags)
        return [d for d, (_, _, tag) in self._offsets.items() if wanted is None or tag in wanted]

    def iterate(self, corpus_tags: Iterable[str] | str | None = None) -> Iterator[Document]:
        """Yield each stored document (optionally filtered by tag) exactly once, in ingest order."""
        wanted = _tag_filter(corpus_tags)
        if not self.data_path.exists():
            return
        with open(self.data_path, "rb") as fh:
            for doc_id, (offset, length, tag) in self._offsets.items():
                if wanted is not None and tag not in wanted:
                    continue
                fh.seek(offset)
                yield parse_record(json.loads(fh.read(length).decode("utf-8")), self.corpus_tags)
