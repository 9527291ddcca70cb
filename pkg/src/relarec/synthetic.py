"""Topic-clustered synthetic corpora for tests, demos and simulation."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

TOPICS: dict[str, tuple[list[str], list[str]]] = {
    "retrieval": (
        ["search", "query", "index", "ranking", "relevance", "retrieval", "engine", "document", "term", "collection"],
        ["lexical", "probabilistic", "boolean", "textual", "relevant"],
    ),
    "recommender": (
        ["recommender", "recommendation", "user", "item", "rating", "preference", "profile", "click", "library", "article"],
        ["collaborative", "personalized", "hybrid", "contextual", "popular"],
    ),
    "biology": (
        ["protein", "gene", "cell", "tissue", "enzyme", "genome", "mutation", "membrane", "receptor", "organism"],
        ["molecular", "cellular", "genetic", "metabolic", "clinical"],
    ),
    "economics": (
        ["market", "price", "inflation", "labor", "wage", "trade", "income", "tax", "policy", "capital"],
        ["fiscal", "monetary", "economic", "regional", "industrial"],
    ),
    "climate": (
        ["climate", "temperature", "emission", "carbon", "ocean", "rainfall", "glacier", "forest", "drought", "aerosol"],
        ["atmospheric", "coastal", "tropical", "seasonal", "global"],
    ),
    "education": (
        ["student", "teacher", "school", "curriculum", "classroom", "exam", "literacy", "pupil", "course", "lecture"],
        ["academic", "primary", "secondary", "remote", "vocational"],
    ),
}

_GLUE = ["a study of", "on the", "towards", "an analysis of", "the role of", "evidence for"]
_FILLER = ["we", "show", "that", "the", "of", "in", "and", "with", "for", "this", "paper", "results"]


def _phrase(rng: np.random.Generator, nouns: list[str], adjs: list[str]) -> list[str]:
    words = []
    if rng.random() < 0.5:
        words.append(adjs[rng.integers(len(adjs))])
    words.extend(nouns[i] for i in rng.choice(len(nouns), size=int(rng.integers(1, 3)), replace=False))
    return words


def make_documents(
    n_docs: int,
    seed: int = 0,
    topics: list[str] | None = None,
    corpus_tags: tuple[str, ...] = ("sowiport", "core"),
    abstract_sentences: int = 4,
) -> list[dict]:
    """Ingestion records (``id``/``title``/``abstract``/``keywords``/``corpus``)."""
    rng = np.random.default_rng(seed)
    names = topics or list(TOPICS)
    records = []
    for i in range(n_docs):
        topic = names[i % len(names)]
        nouns, adjs = TOPICS[topic]
        title = " ".join(_phrase(rng, nouns, adjs) + [_GLUE[rng.integers(len(_GLUE))]] + _phrase(rng, nouns, adjs))
        sentences = []
        for _ in range(abstract_sentences):
            words = _phrase(rng, nouns, adjs)
            words += [_FILLER[j] for j in rng.choice(len(_FILLER), size=3, replace=False)]
            words += _phrase(rng, nouns, adjs)
            sentences.append(" ".join(words).capitalize() + ".")
        records.append({
            "id": f"doc{i:05d}",
            "title": title.capitalize(),
            "abstract": " ".join(sentences),
            "keywords": [nouns[rng.integers(len(nouns))]],
            "corpus": corpus_tags[i % len(corpus_tags)],
            "topic": topic,
        })
    return records


def write_corpus(path: str | Path, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r) + "\n")
