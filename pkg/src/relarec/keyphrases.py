"""Keyphrase extraction, scoring and n-gram-combination search fields.

Candidates are 1-3 stem n-grams whose POS tags match an adjective/noun
pattern ending in a noun. Each candidate gets six statistical features in
[0, 1]; a weighted sum ranks them and the top 19 per document are indexed
into seven fields, one per non-empty subset of {1, 2, 3}-grams.
"""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable, Iterator, Literal, Sequence

from .corpus import Document
from .terms import InvertedIndex, read_blob, search, write_blob
from .textpipe import DEFAULT_STOPWORDS, NOUN_TAGS, Analysis, analyze

MAX_KEYPHRASES = 19
MAX_GRAM = 3

KEYPHRASE_MAGIC = b"RLRK"
KEYPHRASE_VERSION = 1

Count = int | Literal["all"]


class NgramCombo(enum.Enum):
    """The seven searchable n-gram fields, in report row order."""

    UNI = (1,)
    BI = (2,)
    UNI_BI = (1, 2)
    UNI_TRI = (1, 3)
    UNI_BI_TRI = (1, 2, 3)
    BI_TRI = (2, 3)
    TRI = (3,)

    @property
    def key(self) -> str:
        return "+".join(("uni", "bi", "tri")[n - 1] for n in self.value)

    @property
    def label(self) -> str:
        names = [("unigrams", "bigrams", "trigrams")[n - 1] for n in self.value]
        if len(names) == 1:
            return names[0]
        return ", ".join(names[:-1]) + " and " + names[-1]

    def __contains__(self, n: object) -> bool:
        return n in self.value

    @classmethod
    def parse(cls, text: str) -> "NgramCombo":
        for combo in cls:
            if text in (combo.key, combo.name, combo.name.lower()):
                return combo
        raise ValueError(f"unknown n-gram combination {text!r}")


@dataclass(frozen=True)
class PosPattern:
    """Tags allowed inside a phrase, and tags allowed as its final (head) token."""

    body: frozenset[str] = frozenset({"JJ", "NN", "NNS", "NNP", "NNPS"})
    head: frozenset[str] = NOUN_TAGS

    def matches(self, tags: Sequence[str]) -> bool:
        return bool(tags) and tags[-1] in self.head and all(t in self.body for t in tags)


@dataclass(frozen=True)
class FeatureWeights:
    depth: float = 0.0
    height: float = 0.0
    lifespan: float = 0.0
    frequency: float = 0.10
    noun_value: float = 0.60
    maximality: float = 0.40

    def __post_init__(self) -> None:
        values = [getattr(self, f.name) for f in fields(self)]
        if any(v < 0 for v in values):
            raise ValueError("feature weights must be non-negative")
        if not any(v > 0 for v in values):
            raise ValueError("at least one feature weight must be positive")

    @property
    def total(self) -> float:
        return sum(getattr(self, f.name) for f in fields(self))

    def scaled(self, factor: float) -> "FeatureWeights":
        return FeatureWeights(**{f.name: getattr(self, f.name) * factor for f in fields(self)})


@dataclass(frozen=True)
class Features:
    depth: float
    height: float
    lifespan: float
    frequency: float
    noun_value: float
    maximality: float

    def weighted(self, weights: FeatureWeights) -> float:
        return (
            weights.depth * self.depth
            + weights.height * self.height
            + weights.lifespan * self.lifespan
            + weights.frequency * self.frequency
            + weights.noun_value * self.noun_value
            + weights.maximality * self.maximality
        )


@dataclass
class Candidate:
    stems: tuple[str, ...]
    spans: list[tuple[int, ...]] = field(default_factory=list)
    tags: list[tuple[str, ...]] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.stems)

    @property
    def occurrences(self) -> list[int]:
        return [span[0] for span in self.spans]


@dataclass(frozen=True)
class Keyphrase:
    stems: tuple[str, ...]
    features: Features
    score: float
    occurrences: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.stems)

    @property
    def text(self) -> str:
        return " ".join(self.stems)


def _windows(analysis: Analysis, max_skip: int) -> Iterator[tuple]:
    for seg_start, seg_end in analysis.segments:
        toks = [t for t in analysis.tokens if seg_start <= t.position < seg_end]
        for i in range(len(toks)):
            for n in range(1, MAX_GRAM + 1):
                window = toks[i : i + n]
                if len(window) < n:
                    break
                gaps = window[-1].position - window[0].position + 1 - n
                if gaps > max_skip:
                    break
                yield window


def extract_candidates(
    analysis: Analysis, pattern: PosPattern = PosPattern(), max_skip: int = 1
) -> list[Candidate]:
    """All 1-3-gram windows matching ``pattern``.

    A window may step over at most ``max_skip`` removed stopwords in total;
    it never crosses a field boundary.
    """
    found: dict[tuple[str, ...], Candidate] = {}
    for window in _windows(analysis, max_skip):
        tags = tuple(t.pos for t in window)
        if not pattern.matches(tags):
            continue
        stems = tuple(t.stem for t in window)
        cand = found.setdefault(stems, Candidate(stems))
        cand.spans.append(tuple(t.position for t in window))
        cand.tags.append(tags)
    return list(found.values())


def score_candidates(
    candidates: Sequence[Candidate], doc_length: int, weights: FeatureWeights = FeatureWeights()
) -> list[Keyphrase]:
    if not candidates:
        return []
    max_count = max(len(c.spans) for c in candidates)
    # Every contiguous sub-window of a longer candidate occurrence counts as covered.
    covered: set[tuple[int, ...]] = set()
    for c in candidates:
        for span in c.spans:
            for i in range(len(span)):
                for j in range(i + 1, len(span) + 1):
                    if j - i < len(span):
                        covered.add(span[i:j])
    out = []
    for c in candidates:
        starts = c.occurrences
        first, last = min(starts), max(starts)
        count = len(c.spans)
        noun = sum(sum(t in NOUN_TAGS for t in tags) / len(tags) for tags in c.tags) / count
        absorbed = sum(span in covered for span in c.spans)
        feats = Features(
            depth=1.0 - first / doc_length,
            height=1.0 - last / doc_length,
            lifespan=(last - first) / doc_length,
            frequency=count / max_count,
            noun_value=noun,
            maximality=1.0 - absorbed / count,
        )
        out.append(Keyphrase(c.stems, feats, feats.weighted(weights), tuple(sorted(starts))))
    return out


def rank_key(kp: Keyphrase, weight_total: float = 1.0) -> tuple:
    """Best first, then longer, then alphabetical.

    Scores are compared relative to the weight total and rounded, so float
    noise cannot split ties differently when all weights are rescaled.
    """
    return (-round(kp.score / weight_total, 12), -kp.n, kp.text)


def select_top_keyphrases(
    keyphrases: Iterable[Keyphrase], limit: int = MAX_KEYPHRASES, weights: FeatureWeights | None = None
) -> list[Keyphrase]:
    total = weights.total if weights is not None else 1.0
    return sorted(keyphrases, key=lambda kp: rank_key(kp, total))[:limit]


@dataclass(frozen=True)
class KeyphraseConfig:
    weights: FeatureWeights = FeatureWeights()
    pattern: PosPattern = PosPattern()
    max_skip: int = 1
    limit: int = MAX_KEYPHRASES
    stopwords: frozenset[str] = DEFAULT_STOPWORDS


def document_keyphrases(doc: Document, config: KeyphraseConfig = KeyphraseConfig()) -> list[Keyphrase]:
    analysis = analyze(doc.title, doc.abstract, stopwords=config.stopwords)
    candidates = extract_candidates(analysis, config.pattern, config.max_skip)
    scored = score_candidates(candidates, analysis.length, config.weights)
    return select_top_keyphrases(scored, config.limit, config.weights)


class KeyphraseIndex:
    """Selected keyphrases per document plus one inverted index per n-gram combo.

    The "terms" of each field are whole keyphrases (stems joined by spaces),
    weighted by how often the phrase occurs in the document.
    """

    def __init__(self, keyphrases: dict[str, list[Keyphrase]]):
        self.keyphrases = keyphrases
        self.doc_count = len(keyphrases)
        self.fields: dict[NgramCombo, InvertedIndex] = {}
        for combo in NgramCombo:
            counts = {}
            for doc_id, kps in keyphrases.items():
                terms = {kp.text: len(kp.occurrences) for kp in kps if kp.n in combo}
                if terms:
                    counts[doc_id] = terms
            self.fields[combo] = InvertedIndex.from_term_counts(counts, doc_count=self.doc_count)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self.keyphrases

    def to_dict(self) -> dict:
        return {
            doc_id: [
                {"stems": list(kp.stems), "features": asdict(kp.features), "score": kp.score,
                 "occurrences": list(kp.occurrences)}
                for kp in kps
            ]
            for doc_id, kps in self.keyphrases.items()
        }

    @classmethod
    def from_dict(cls, data: dict) -> "KeyphraseIndex":
        return cls({
            doc_id: [
                Keyphrase(tuple(r["stems"]), Features(**r["features"]), r["score"], tuple(r["occurrences"]))
                for r in rows
            ]
            for doc_id, rows in data.items()
        })

    def dump_records(self) -> Iterator[dict]:
        for doc_id, kps in self.keyphrases.items():
            for rank, kp in enumerate(kps, start=1):
                yield {"doc_id": doc_id, "rank": rank, "stems": list(kp.stems), "n": kp.n,
                       **asdict(kp.features), "score": kp.score}


def index_keyphrases(docs: Iterable[Document], config: KeyphraseConfig = KeyphraseConfig()) -> KeyphraseIndex:
    keyphrases = {d.doc_id: document_keyphrases(d, config) for d in docs}
    if not keyphrases:
        raise ValueError("nothing to index")
    return KeyphraseIndex(keyphrases)


def save_keyphrase_index(index: KeyphraseIndex, path) -> None:
    write_blob(path, index.to_dict(), KEYPHRASE_MAGIC, KEYPHRASE_VERSION)


def load_keyphrase_index(path) -> KeyphraseIndex:
    return KeyphraseIndex.from_dict(read_blob(path, KEYPHRASE_MAGIC, KEYPHRASE_VERSION))


def check_count(count: Count) -> None:
    if count == "all":
        return
    if isinstance(count, bool) or not isinstance(count, int) or not 1 <= count <= MAX_KEYPHRASES:
        raise ValueError(f"keyphrase count must be 1..{MAX_KEYPHRASES} or 'all', got {count!r}")


def query_keyphrases(doc_id: str, index: KeyphraseIndex, combo: NgramCombo, count: Count = "all") -> list[Keyphrase]:
    """The query document's best keyphrases whose gram size belongs to ``combo``."""
    check_count(count)
    eligible = [kp for kp in index.keyphrases[doc_id] if kp.n in combo]
    return eligible if count == "all" else eligible[:count]


def recommend_keyphrases(
    doc_id: str, index: KeyphraseIndex, combo: NgramCombo, count: Count = "all", k: int = 6
) -> list[tuple[str, float]]:
    if k < 1:
        raise ValueError("k must be >= 1")
    query = query_keyphrases(doc_id, index, combo, count)
    if not query:
        return []
    return search([kp.text for kp in query], index.fields[combo], exclude=doc_id, k=k)
