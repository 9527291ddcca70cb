import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from oracles import all_rank_splits, mann_whitney_null_counts
from relarec.analytics import (
    DataIntegrityError,
    Logs,
    NoLogs,
    build_report,
    count_bucket,
    ctr,
    exact_u_distribution,
    format_pct,
    normal_p_value,
    render_text,
    report_records,
    slice_ctr,
    wilcoxon_rank_sum,
    write_report,
)


def test_ctr_examples():
    assert format_pct(ctr(9, 1000)) == "0.90%"
    assert format_pct(ctr(33089, 33_500_000)) == "0.10%"
    assert ctr(0, 0) is None and format_pct(None) == "no data"
    with pytest.raises(DataIntegrityError):
        ctr(5, 4)


@given(st.integers(0, 10**6), st.integers(1, 10**6), st.integers(1, 1000))
def test_ctr_scale_invariant(c, d, k):
    c = min(c, d)
    assert ctr(k * c, k * d) == pytest.approx(ctr(c, d), rel=1e-15)


def test_count_buckets():
    assert [count_bucket(x) for x in (1, 3, 4, 7, 8, 11, 12, 19)] == [
        "1-3", "1-3", "4-7", "4-7", "8-11", "8-11", "12-19", "12-19"]
    assert count_bucket(None) is None


def delivery(i, scenario="jabref", arm="terms", items=6, day="2017-03-01", combo=None, used=None):
    params = {"combo": combo, "count": "all", "used": used} if arm == "keyphrases" else None
    return {"delivery_id": f"dlv-{i:09d}", "scenario": scenario, "doc_id": "d", "arm": arm, "params": params,
            "items": [f"x{j}" for j in range(items)], "timestamp": f"{day}T00:00:00+00:00", "fallback": False,
            "requested_arm": None}


def click(i, rank):
    return {"delivery_id": f"dlv-{i:09d}", "rank": rank, "timestamp": "2017-03-01T00:00:00+00:00"}


def test_orphan_and_out_of_range_clicks_raise():
    with pytest.raises(DataIntegrityError, match="dlv-000000009"):
        slice_ctr(Logs([delivery(1)], [click(9, 1)]), ["algorithm"])
    with pytest.raises(DataIntegrityError):
        slice_ctr(Logs([delivery(1, items=2)], [click(1, 3)]), ["algorithm"])


def test_duplicate_clicks_counted_once():
    cells = slice_ctr(Logs([delivery(1)], [click(1, 2), click(1, 2)]), ["algorithm"])
    assert cells[("terms",)].clicks == 1


def test_empty_logs_report_no_data(tmp_path):
    with pytest.raises(NoLogs, match="no logs found"):
        Logs.load(tmp_path)
    (tmp_path / "deliveries.log").write_text("")
    report = build_report(Logs.load(tmp_path))
    assert "no data" in render_text(report)


def random_logs(seed, n=400):
    rng = np.random.default_rng(seed)
    deliveries, clicks = [], []
    combos = ["uni", "bi", "tri", "uni+bi"]
    for i in range(n):
        arm = ["terms", "keyphrases", "embeddings"][rng.integers(3)]
        d = delivery(i, scenario=["jabref", "sowiport"][rng.integers(2)], arm=arm, items=int(rng.integers(1, 7)),
                     day=f"2017-03-{rng.integers(1, 6):02d}", combo=combos[rng.integers(4)],
                     used=int(rng.integers(1, 20)))
        deliveries.append(d)
        for rank in range(1, len(d["items"]) + 1):
            if rng.random() < 0.2:
                clicks.append(click(i, rank))
    return Logs(deliveries, clicks)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.lists(st.sampled_from(["scenario", "algorithm", "combo", "count_bucket", "day"]),
                                         min_size=1, max_size=3, unique=True))
def test_partitions_conserve_totals(seed, grouping):
    logs = random_logs(seed)
    cells = slice_ctr(logs, grouping)
    assert sum(c.deliveries for c in cells.values()) == sum(len(d["items"]) for d in logs.deliveries)
    assert sum(c.clicks for c in cells.values()) == len(logs.clicks)


def test_exact_null_matches_recurrence():
    for n in range(1, 10):
        for m in range(1, 11 - n):
            assert exact_u_distribution(n, m) == mann_whitney_null_counts(n, m)


def test_exact_p_values():
    result = wilcoxon_rank_sum([1, 2, 3], [4, 5, 6])
    assert result.method == "exact" and result.statistic == 0 and result.p_value == pytest.approx(0.1)
    assert wilcoxon_rank_sum([5, 5], [5, 5]).p_value == pytest.approx(1.0)
    with pytest.raises(ValueError):
        wilcoxon_rank_sum([], [1.0])


def test_exact_agrees_with_scipy():
    rng = np.random.default_rng(0)
    for n, m in [(2, 3), (3, 3), (4, 5), (6, 6), (5, 7)]:
        for _ in range(5):
            a, b = rng.normal(size=n), rng.normal(0.5, size=m)
            ours = wilcoxon_rank_sum(a, b).p_value
            theirs = stats.mannwhitneyu(a, b, alternative="two-sided", method="exact").pvalue
            assert ours == pytest.approx(theirs, abs=1e-12)


def test_normal_approximation_agrees_with_scipy_asymptotic():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a = rng.integers(0, 6, 15).astype(float)
        b = rng.integers(1, 7, 18).astype(float)
        theirs = stats.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic", use_continuity=True).pvalue
        assert normal_p_value(a, b) == pytest.approx(theirs, abs=1e-12)
        assert wilcoxon_rank_sum(a, b).method == "normal-approximation"


def test_normal_close_to_exact_on_six_by_six():
    worst = 0.0
    for a, b in all_rank_splits(6, 6):
        exact = wilcoxon_rank_sum(a, b).p_value
        worst = max(worst, abs(normal_p_value(a, b) - exact))
    assert worst <= 0.02


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=1, max_size=8), st.lists(st.floats(-100, 100), min_size=1, max_size=8),
       st.sampled_from(["exp", "cube", "affine"]))
def test_p_value_invariant_to_monotone_transform(a, b, kind):
    f = {"exp": lambda x: float(np.exp(x / 50)), "cube": lambda x: x**3, "affine": lambda x: 3 * x + 7}[kind]
    # transforms must stay strictly monotone in floating point on these samples
    values = sorted(set(a + b))
    mapped = [f(v) for v in values]
    if any(x >= y for x, y in zip(mapped, mapped[1:])):
        return
    before = wilcoxon_rank_sum(a, b)
    after = wilcoxon_rank_sum([f(x) for x in a], [f(x) for x in b])
    assert after.p_value == pytest.approx(before.p_value, abs=1e-12)
    assert 0.0 <= before.p_value <= 1.0


def table_fixture():
    deliveries, clicks, i = [], [], 0
    plan = [("jabref", "terms", None, 2), ("jabref", "embeddings", None, 3), ("jabref", "keyphrases", "tri", 5),
            ("jabref", "keyphrases", "uni", 2), ("sowiport", "terms", None, 4), ("sowiport", "embeddings", None, 1),
            ("sowiport", "keyphrases", "bi", 2)]
    for scenario, arm, combo, n_clicks in plan:
        for day in range(1, 4):
            for _ in range(10):
                i += 1
                deliveries.append(delivery(i, scenario, arm, 6, f"2017-03-{day:02d}", combo, used=5))
                if n_clicks:
                    clicks.append(click(i, 1))
                    n_clicks -= 1
    return Logs(deliveries, clicks)


def test_report_table_and_markers(tmp_path):
    report = build_report(table_fixture())
    assert len(report.rows) == 10
    by_label = {r.label: r for r in report.rows}
    assert by_label["Keyphrases (trigrams)"].markers == {"jabref": "best"}
    assert by_label["Terms"].markers == {"jabref": "worst", "sowiport": "best"}
    assert by_label["Document Embeddings"].markers == {"sowiport": "worst"}
    text = render_text(report)
    assert "**2.78%**" in text and "no data" in text
    assert report.by_count["jabref"]["4-7"].deliveries == 360
    paths = write_report(report, tmp_path)
    records = [line for line in paths[1].read_text().splitlines()]
    assert len(records) == len(list(report_records(report)))


def test_report_is_deterministic():
    a, b = build_report(table_fixture()), build_report(table_fixture())
    assert render_text(a) == render_text(b)
    assert list(report_records(a)) == list(report_records(b))


def test_every_small_split_has_valid_p():
    for n, m in itertools.product(range(1, 5), range(1, 5)):
        for a, b in all_rank_splits(n, m):
            p = wilcoxon_rank_sum(a, b).p_value
            assert 0.0 < p <= 1.0
