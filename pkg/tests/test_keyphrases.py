import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GOLDEN_TITLE, random_docs
from oracles import brute_keyphrases
from relarec.corpus import Document
from relarec.keyphrases import (
    MAX_KEYPHRASES,
    FeatureWeights,
    KeyphraseConfig,
    KeyphraseIndex,
    NgramCombo,
    document_keyphrases,
    extract_candidates,
    index_keyphrases,
    load_keyphrase_index,
    query_keyphrases,
    recommend_keyphrases,
    save_keyphrase_index,
    score_candidates,
    select_top_keyphrases,
)
from relarec.textpipe import analyze

GOLDEN_BIGRAMS = {"research paper", "recommend system", "paper recommend", "quantit studi"}
GOLDEN_TRIGRAMS = {"research paper recommend", "paper recommend system", "system quantit studi"}


def candidate_texts(text):
    return {" ".join(c.stems) for c in extract_candidates(analyze(text))}


def test_golden_candidates():
    found = candidate_texts(GOLDEN_TITLE)
    assert GOLDEN_BIGRAMS <= found
    assert GOLDEN_TRIGRAMS <= found
    assert {"research", "paper", "recommend", "perform"} <= found


def test_window_skips_at_most_one_stopword():
    # "of the" removes two stopwords between study and performance: no bigram may bridge them
    found = candidate_texts("quantitative study of the performance")
    assert "studi perform" not in found
    assert "studi perform" in candidate_texts("quantitative study of performance")


def test_windows_do_not_cross_fields():
    analysis = analyze("graph model", "network index")
    found = {" ".join(c.stems) for c in extract_candidates(analysis)}
    assert "model network" not in found and "graph model" in found


def test_repeated_bigram_features():
    # "x y x y": all nouns; the bigram "x y" occurs twice, each time inside a trigram
    cands = extract_candidates(analyze("graph model graph model"))
    kps = {kp.text: kp for kp in score_candidates(cands, 4)}
    xy = kps["graph model"]
    assert xy.features.frequency == 1.0
    assert xy.features.maximality == 0.0
    assert xy.features.noun_value == 1.0
    assert xy.score == pytest.approx(0.1 * 1.0 + 0.6 * 1.0 + 0.4 * 0.0)
    xyx = kps["graph model graph"]
    # one occurrence out of a maximum of two, never covered
    assert xyx.score == pytest.approx(0.1 * 0.5 + 0.6 + 0.4)
    assert xyx.features.depth == 1.0 and xyx.features.lifespan == 0.0


def test_position_features():
    cands = extract_candidates(analyze("graph alpha beta gamma graph"))
    kp = {k.text: k for k in score_candidates(cands, 5)}["graph"]
    assert kp.features.depth == 1.0
    assert kp.features.height == pytest.approx(1 - 4 / 5)
    assert kp.features.lifespan == pytest.approx(4 / 5)


def test_combo_enum():
    assert len(NgramCombo) == 7
    assert [c.key for c in NgramCombo] == ["uni", "bi", "uni+bi", "uni+tri", "uni+bi+tri", "bi+tri", "tri"]
    assert NgramCombo.UNI_BI_TRI.label == "unigrams, bigrams and trigrams"
    assert NgramCombo.parse("bi+tri") is NgramCombo.BI_TRI
    with pytest.raises(ValueError):
        NgramCombo.parse("quad")


def test_weights_validation():
    with pytest.raises(ValueError):
        FeatureWeights(frequency=-0.1)
    with pytest.raises(ValueError):
        FeatureWeights(0, 0, 0, 0, 0, 0)


def test_long_document_capped_at_nineteen():
    words = " ".join(f"{a} {n}" for a in ["neural", "sparse", "large", "novel", "semantic"]
                     for n in ["graph", "model", "network", "query", "index", "library"])
    kps = document_keyphrases(Document("d", "long", words))
    assert len(kps) == MAX_KEYPHRASES


def test_tie_rule_prefers_longer_then_alphabetical():
    cands = extract_candidates(analyze("graph", "model", "index"))
    ranked = select_top_keyphrases(score_candidates(cands, 3))
    assert [kp.text for kp in ranked] == ["graph", "index", "model"]


def small_index(seed=5, n=30):
    docs = random_docs(np.random.default_rng(seed), n)
    return docs, index_keyphrases(docs)


def test_every_keyphrase_in_exactly_four_fields():
    docs, index = small_index()
    for doc_id, kps in index.keyphrases.items():
        for kp in kps:
            hits = [c for c in NgramCombo if kp.text in index.fields[c].doc_terms(doc_id)]
            assert len(hits) == 4 and all(kp.n in c for c in hits)


def test_count_one_and_empty_trigrams():
    index = KeyphraseIndex({
        "q": select_top_keyphrases(score_candidates(extract_candidates(analyze("graph model", "index")), 3)),
        "a": select_top_keyphrases(score_candidates(extract_candidates(analyze("graph model")), 2)),
        "b": select_top_keyphrases(score_candidates(extract_candidates(analyze("index")), 1)),
    })
    assert len(query_keyphrases("q", index, NgramCombo.UNI, 1)) == 1
    assert recommend_keyphrases("q", index, NgramCombo.TRI) == []
    assert [d for d, _ in recommend_keyphrases("q", index, NgramCombo.BI)] == ["a"]
    with pytest.raises(ValueError):
        query_keyphrases("q", index, NgramCombo.UNI, 20)
    with pytest.raises(ValueError):
        query_keyphrases("q", index, NgramCombo.UNI, 0)


def test_matches_brute_force_all_combos():
    rng = np.random.default_rng(21)
    for _ in range(20):
        docs = random_docs(rng, int(rng.integers(5, 40)))
        index = index_keyphrases(docs)
        for d in docs[:4]:
            for combo in NgramCombo:
                for count in ("all", 1, 5):
                    expected = brute_keyphrases(index.keyphrases, d.doc_id, combo.value, count)
                    assert recommend_keyphrases(d.doc_id, index, combo, count) == expected


def test_save_load_and_dump(tmp_path):
    docs, index = small_index()
    save_keyphrase_index(index, tmp_path / "k.idx")
    loaded = load_keyphrase_index(tmp_path / "k.idx")
    for d in docs:
        for combo in NgramCombo:
            assert recommend_keyphrases(d.doc_id, loaded, combo) == recommend_keyphrases(d.doc_id, index, combo)
    rec = next(index.dump_records())
    assert set(rec) == {"doc_id", "rank", "stems", "n", "depth", "height", "lifespan", "frequency",
                        "noun_value", "maximality", "score"}
    json.dumps(rec)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_features_in_unit_interval(seed):
    for doc in random_docs(np.random.default_rng(seed), 3):
        analysis = analyze(doc.title, doc.abstract)
        for kp in score_candidates(extract_candidates(analysis), analysis.length):
            for value in vars(kp.features).values():
                assert 0.0 <= value <= 1.0


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_top_set_invariant_to_weight_scaling(seed, factor):
    base = FeatureWeights()
    for doc in random_docs(np.random.default_rng(seed), 3, length=(10, 60)):
        plain = document_keyphrases(doc, KeyphraseConfig(weights=base))
        scaled = document_keyphrases(doc, KeyphraseConfig(weights=base.scaled(factor)))
        assert [kp.text for kp in plain] == [kp.text for kp in scaled]
