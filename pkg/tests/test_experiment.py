import math
import threading
from collections import Counter
from datetime import datetime, timezone

import numpy as np
import pytest

from conftest import read_lines
from relarec.corpus import DocumentNotFound
from relarec.experiment import (
    CLICKS_LOG,
    DELIVERIES_LOG,
    Engine,
    ExperimentConfig,
    InvalidRank,
    UnknownDelivery,
    UserModel,
    assign_arm,
    simulate,
)
from relarec.keyphrases import NgramCombo, recommend_keyphrases


class Stub:
    def __init__(self, *values):
        self.values = list(values)

    def random(self):
        return self.values.pop(0)


FIXED = datetime(2017, 3, 1, tzinfo=timezone.utc)


def test_cumulative_intervals_in_canonical_order():
    cfg = ExperimentConfig()
    assert assign_arm(cfg, Stub(0.10)).arm == "terms"
    assert assign_arm(cfg, Stub(0.9499)).arm == "terms"
    choice = assign_arm(cfg, Stub(0.96, 0.0, 0.9))
    assert (choice.arm, choice.combo, choice.count) == ("keyphrases", NgramCombo.UNI, "all")
    choice = assign_arm(cfg, Stub(0.97, 0.99, 0.1, 0.0))
    assert (choice.combo, choice.count) == (NgramCombo.TRI, 1)
    assert assign_arm(cfg, Stub(0.97, 0.5, 0.1, 0.999999)).count == 19
    assert assign_arm(cfg, Stub(0.985)).arm == "embeddings"
    # same weights listed in another order draw the same arms
    shuffled = ExperimentConfig(arm_weights={"embeddings": 0.02, "keyphrases": 0.03, "terms": 0.95})
    assert assign_arm(shuffled, Stub(0.10)).arm == "terms"


def test_single_arm_config():
    cfg = ExperimentConfig(arm_weights={"terms": 1.0})
    rng = np.random.default_rng(0)
    assert {assign_arm(cfg, rng).arm for _ in range(1000)} == {"terms"}


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(arm_weights={"terms": 0.5, "keyphrases": 0.4})
    with pytest.raises(ValueError):
        ExperimentConfig(arm_weights={"terms": 1.2, "keyphrases": -0.2})
    with pytest.raises(ValueError):
        ExperimentConfig(arm_weights={"bm25": 1.0})


def test_arm_frequencies_within_three_sigma():
    cfg = ExperimentConfig()
    rng = np.random.default_rng(42)
    n = 100_000
    counts = Counter(assign_arm(cfg, rng).arm for _ in range(n))
    for arm, p in cfg.arm_weights.items():
        assert abs(counts[arm] - n * p) <= 3 * math.sqrt(n * p * (1 - p))


def engine_for(models, tmp_path=None, arms=None, seed=0, **kw):
    cfg = ExperimentConfig(arm_weights=arms or {"terms": 0.4, "keyphrases": 0.3, "embeddings": 0.3}, seed=seed)
    return Engine(cfg, models, log_dir=tmp_path, clock=lambda: FIXED, **kw)


def test_delivery_shape(small_models, tmp_path):
    with engine_for(small_models, tmp_path) as engine:
        ids = sorted(small_models["jabref"].terms.field_length)[:80]
        for doc_id in ids:
            record = engine.deliver("jabref", doc_id)
            assert 1 <= len(record.items) <= 6
            assert doc_id not in record.items
            assert (record.params is not None) == (record.arm == "keyphrases")
            if record.arm == "keyphrases":
                assert set(record.params) == {"combo", "count", "used"}
        assert len(engine.deliver("jabref", ids[0], k=2).items) <= 2
        assert len(engine.deliver("jabref", ids[0], k=50).items) <= 6
    logged = read_lines(tmp_path / DELIVERIES_LOG)
    assert len(logged) == 82
    assert len({r["delivery_id"] for r in logged}) == 82


def test_unknown_inputs(small_models):
    engine = engine_for(small_models)
    with pytest.raises(DocumentNotFound):
        engine.deliver("jabref", "nope")
    with pytest.raises(KeyError):
        engine.deliver("arxiv", "doc00000")


def test_fallback_to_terms_is_flagged(small_models):
    engine = engine_for(small_models, arms={"keyphrases": 1.0})
    index = small_models["jabref"].keyphrases
    # a document whose trigram query matches nothing
    target = next(d for d in sorted(index.keyphrases) if not recommend_keyphrases(d, index, NgramCombo.TRI))
    engine.rng = Stub(0.0, 0.99, 0.9)  # keyphrases, trigrams, all
    record = engine.deliver("jabref", target)
    assert record.fallback and record.arm == "terms" and record.requested_arm == "keyphrases"
    assert record.params is None


def test_click_validation_and_dedup(small_models, tmp_path):
    with engine_for(small_models, tmp_path, arms={"terms": 1.0}) as engine:
        record = engine.deliver("jabref", "doc00001")
        n = len(record.items)
        with pytest.raises(InvalidRank):
            engine.record_click(record.delivery_id, n + 1)
        with pytest.raises(InvalidRank):
            engine.record_click(record.delivery_id, 0)
        with pytest.raises(UnknownDelivery):
            engine.record_click("dlv-999999999", 1)
        assert engine.record_click(record.delivery_id, 1) is True
        assert engine.record_click(record.delivery_id, 1) is False
    assert len(read_lines(tmp_path / CLICKS_LOG)) == 1


def test_restart_resumes_ids_and_rng(small_models, tmp_path):
    state = tmp_path / "state.json"
    with engine_for(small_models, tmp_path / "a", state_path=state) as engine:
        first = [engine.deliver("jabref", "doc00001").delivery_id for _ in range(5)]
    with engine_for(small_models, tmp_path / "a", state_path=state) as engine:
        resumed = [engine.deliver("jabref", "doc00001") for _ in range(5)]
    with engine_for(small_models, tmp_path / "b") as engine:
        straight = [engine.deliver("jabref", "doc00001") for _ in range(10)]
    assert first == [f"dlv-{i:09d}" for i in range(1, 6)]
    assert [r.delivery_id for r in resumed] == [f"dlv-{i:09d}" for i in range(6, 11)]
    assert [(r.arm, r.params, r.items) for r in resumed] == [(r.arm, r.params, r.items) for r in straight[5:]]


def test_concurrent_deliveries_get_unique_ids(small_models, tmp_path):
    with engine_for(small_models, tmp_path) as engine:
        ids = sorted(small_models["jabref"].terms.field_length)

        def worker(offset):
            for i in range(50):
                record = engine.deliver("jabref", ids[(offset * 50 + i) % len(ids)])
                engine.record_click(record.delivery_id, 1)

        threads = [threading.Thread(target=worker, args=(t,)) for t in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    deliveries = read_lines(tmp_path / DELIVERIES_LOG)
    assert len(deliveries) == 400 == len({r["delivery_id"] for r in deliveries})
    assert len(read_lines(tmp_path / CLICKS_LOG)) == 400


def run_sim(models, log_dir, seed=7, n=600, rates=None, decay=0.6, arms=None):
    user = UserModel(rates or {"terms": 0.2, "keyphrases": 0.4, "embeddings": 0.3}, position_decay=decay)
    with engine_for(models, log_dir, arms=arms) as engine:
        return simulate(engine, user, n, seed=seed, days=5)


def test_simulation_replay_is_deterministic(small_models, tmp_path):
    run_sim(small_models, tmp_path / "a")
    run_sim(small_models, tmp_path / "b")
    for name in (DELIVERIES_LOG, CLICKS_LOG):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    run_sim(small_models, tmp_path / "c", seed=8)
    assert (tmp_path / "a" / CLICKS_LOG).read_bytes() != (tmp_path / "c" / CLICKS_LOG).read_bytes()


def test_simulation_has_no_orphan_clicks(small_models, tmp_path):
    summary = run_sim(small_models, tmp_path)
    deliveries = {r["delivery_id"]: r for r in read_lines(tmp_path / DELIVERIES_LOG)}
    clicks = read_lines(tmp_path / CLICKS_LOG)
    assert summary.clicks == len(clicks) > 0
    for c in clicks:
        assert 1 <= c["rank"] <= len(deliveries[c["delivery_id"]]["items"])
    days = {r["timestamp"][:10] for r in deliveries.values()}
    assert len(days) == 5


def test_zero_base_rate_gives_no_clicks(small_models, tmp_path):
    summary = run_sim(small_models, tmp_path, rates={"terms": 0.0, "keyphrases": 0.0, "embeddings": 0.0})
    assert summary.clicks == 0 and summary.deliveries > 0


def test_measured_ctr_within_binomial_interval(small_models, tmp_path):
    rates = {"terms": 0.05, "keyphrases": 0.1, "embeddings": 0.075}
    run_sim(small_models, tmp_path, n=6000, rates=rates, seed=3)
    deliveries = read_lines(tmp_path / DELIVERIES_LOG)
    clicks = Counter(c["delivery_id"] for c in read_lines(tmp_path / CLICKS_LOG))
    for arm, p in rates.items():
        rows = [r for r in deliveries if r["arm"] == arm]
        items = sum(len(r["items"]) for r in rows)
        bias = sum(0.6 ** (k - 1) for r in rows for k in range(1, len(r["items"]) + 1)) / items
        expected = p * bias
        measured = sum(clicks[r["delivery_id"]] for r in rows) / items
        half_width = 2.576 * math.sqrt(expected * (1 - expected) / items)
        assert abs(measured - expected) <= half_width, arm
