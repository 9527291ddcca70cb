import json
import string
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from relarec.config import load_config  # noqa: E402
from relarec.corpus import Document  # noqa: E402
from relarec.synthetic import make_documents, write_corpus  # noqa: E402
from relarec.workspace import Workspace  # noqa: E402

GOLDEN_TITLE = "Research Paper Recommender System - A Quantitative Study of Performance"

# Words with known tags; mixing them gives corpora with real noun/adjective runs and stopwords.
_NOUNS = ["graph", "model", "system", "network", "query", "index", "library", "citation", "user", "text"]
_ADJS = ["large", "neural", "semantic", "digital", "sparse", "novel"]
_GLUE = ["the", "of", "a", "and", "in", "for", "is", "we", "show"]


def random_docs(rng: np.random.Generator, n_docs: int, length: tuple[int, int] = (4, 30)) -> list[Document]:
    vocab = _NOUNS + _ADJS + _GLUE
    weights = np.array([4.0] * len(_NOUNS) + [2.0] * len(_ADJS) + [2.0] * len(_GLUE))
    weights /= weights.sum()
    docs = []
    for i in range(n_docs):
        n = int(rng.integers(*length))
        words = [vocab[j] for j in rng.choice(len(vocab), size=n, p=weights)]
        cut = max(1, n // 4)
        docs.append(Document(f"d{i:03d}", " ".join(words[:cut]), " ".join(words[cut:])))
    return docs


def random_word(rng, lo=1, hi=10):
    return "".join(rng.choice(list(string.ascii_lowercase), size=int(rng.integers(lo, hi))))


@pytest.fixture(scope="session")
def synth_records():
    return make_documents(1000, seed=3)


@pytest.fixture(scope="session")
def built_workspace(tmp_path_factory, synth_records):
    """A 1000-document workspace with every artifact built; treat as read-only."""
    root = tmp_path_factory.mktemp("ws")
    corpus = root / "corpus.jsonl"
    write_corpus(corpus, synth_records)
    cfg = load_config(environ={})
    cfg["embeddings"]["epochs"] = 10
    cfg["embeddings"]["dim"] = 32
    ws = Workspace(root / "data", cfg)
    summary = ws.store().ingest_file(corpus)
    assert summary.rejected == 0
    ws.build_terms()
    ws.build_keyphrases()
    ws.train_embeddings()
    return ws


def read_lines(path):
    return [json.loads(x) for x in Path(path).read_text().splitlines() if x.strip()]


def build_models(records, scenarios=(("sowiport", ("sowiport",)), ("jabref", ("sowiport", "core"))), dim=16):
    from relarec.embeddings import EmbeddingParams, train_embeddings
    from relarec.experiment import ScenarioModels
    from relarec.keyphrases import index_keyphrases
    from relarec.terms import build_index

    models = {}
    for name, tags in scenarios:
        docs = [Document(r["id"], r["title"], r["abstract"], tuple(r["keywords"]), r["corpus"])
                for r in records if r["corpus"] in tags]
        models[name] = ScenarioModels(build_index(docs), index_keyphrases(docs),
                                      train_embeddings(docs, EmbeddingParams(dim=dim, epochs=5)))
    return models


@pytest.fixture(scope="session")
def small_models():
    return build_models(make_documents(240, seed=12))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
