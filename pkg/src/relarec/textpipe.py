"""Text normalization shared by every recommender.

The pipeline runs in a fixed order: tokenize, POS-tag, drop stopwords,
stem. Every stage is a pure function over immutable tokens.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

from nltk.stem.porter import PorterStemmer

from .pos_lexicon import LEXICON

# The classic 33-word English stop set used by Lucene's StopAnalyzer.
DEFAULT_STOPWORDS: frozenset[str] = frozenset(
    """
    a an and are as at be but by for if in into is it no not of on or such
    that the their then there these they this to was will with
    """.split()
)

NOUN_TAGS = frozenset({"NN", "NNS", "NNP", "NNPS"})

# Letters only: digits, punctuation, hyphens and symbols all separate tokens.
_WORD_RE = re.compile(r"[^\W\d_]+")

_STEMMER = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)


@dataclass(frozen=True, slots=True)
class Token:
    surface: str
    position: int
    pos: str | None = None
    stem: str | None = None


@dataclass(frozen=True)
class Analysis:
    """Pipeline output for one document.

    ``tokens`` holds the surviving (non-stopword) tokens; ``length`` counts
    every token before stopword removal, so positions index into a sequence
    of that length. ``segments`` are half-open position ranges, one per
    input field, which n-gram windows must not straddle.
    """

    tokens: tuple[Token, ...]
    length: int
    segments: tuple[tuple[int, int], ...]

    @property
    def stems(self) -> list[str]:
        return [t.stem for t in self.tokens]


def tokenize(text: str, start: int = 0) -> list[Token]:
    text = unicodedata.normalize("NFC", text)
    return [
        Token(surface=m.group(0).lower(), position=start + i)
        for i, m in enumerate(_WORD_RE.finditer(text))
    ]


def tag_word(word: str) -> str:
    """Penn Treebank tag for a lowercase word: lexicon, suffix rules, NN."""
    tag = LEXICON.get(word)
    if tag is not None:
        return tag
    n = len(word)
    if n > 4 and word.endswith("ly"):
        return "RB"
    if n > 5 and word.endswith("ing"):
        return "VBG"
    if n > 4 and word.endswith("ed"):
        return "VBN"
    if word.endswith(("ous", "ful", "ive", "able", "ible", "ical", "less", "ary", "ish", "ial")):
        return "JJ"
    if n > 4 and word.endswith(("al", "ic")):
        return "JJ"
    if word.endswith(("tion", "sion", "ment", "ness", "ity", "ism", "ance", "ence", "ship", "ogy")):
        return "NN"
    if n > 3 and word.endswith("s") and not word.endswith(("ss", "us", "is")):
        singular = word[:-3] + "y" if word.endswith("ies") else word[:-1]
        base = LEXICON.get(singular)
        if base == "VB":
            return "VBZ"
        return "NNS"
    return "NN"


def pos_tag(tokens: Sequence[Token]) -> list[Token]:
    return [replace(t, pos=tag_word(t.surface)) for t in tokens]


def remove_stopwords(
    tokens: Iterable[Token], stopwords: frozenset[str] = DEFAULT_STOPWORDS
) -> list[Token]:
    return [t for t in tokens if t.surface not in stopwords]


@lru_cache(maxsize=200_000)
def stem(surface: str) -> str:
    """Porter stem, iterated to a fixed point so that ``stem`` is idempotent."""
    current = surface
    while True:
        nxt = _STEMMER.stem(current, to_lowercase=False)
        if nxt == current or not nxt:
            return current
        current = nxt


def stem_tokens(tokens: Iterable[Token]) -> list[Token]:
    return [replace(t, stem=stem(t.surface)) for t in tokens]


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Read a stopword file: one word per line, ``#`` starts a comment."""
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.split("#", 1)[0].strip().lower()
            if word:
                words.add(word)
    return frozenset(words)


def analyze(
    *fields: str, stopwords: frozenset[str] = DEFAULT_STOPWORDS
) -> Analysis:
    """Run the full pipeline over one or more text fields of a document.

    Positions continue across fields so they stay contiguous document-wide.
    """
    raw: list[Token] = []
    segments = []
    for text in fields:
        start = len(raw)
        raw.extend(tokenize(text or "", start=start))
        segments.append((start, len(raw)))
    kept = stem_tokens(remove_stopwords(pos_tag(raw), stopwords))
    return Analysis(tokens=tuple(kept), length=len(raw), segments=tuple(segments))
