"""Click-through-rate slicing, rank-sum significance tests and reports.

The unit counted is the individual delivered item: a delivery of six
items adds six to the denominator.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterator, Mapping, Sequence

from .experiment import CLICKS_LOG, DELIVERIES_LOG, read_jsonl
from .keyphrases import NgramCombo

GROUP_KEYS = ("scenario", "algorithm", "combo", "count_bucket", "day")
DEFAULT_BUCKETS: tuple[tuple[int, int], ...] = ((1, 3), (4, 7), (8, 11), (12, 19))
EXACT_LIMIT = 12
SAMPLE_UNIT = "per-day CTR"


class DataIntegrityError(ValueError):
    pass


class NoLogs(FileNotFoundError):
    pass


def ctr(clicks: int, deliveries: int) -> float | None:
    """clicks / deliveries, or None when nothing was delivered."""
    if deliveries < 0 or clicks < 0:
        raise DataIntegrityError("negative counts")
    if clicks > deliveries:
        raise DataIntegrityError(f"{clicks} clicks exceed {deliveries} deliveries")
    if deliveries == 0:
        return None
    return clicks / deliveries


def format_pct(rate: float | None, digits: int = 2) -> str:
    return "no data" if rate is None else f"{rate * 100:.{digits}f}%"


@dataclass
class CtrCell:
    key: tuple
    deliveries: int = 0
    clicks: int = 0

    @property
    def ctr(self) -> float | None:
        return ctr(self.clicks, self.deliveries)


@dataclass
class Logs:
    """Decoded log records; treat as immutable once sliced (joins are cached)."""

    deliveries: list[dict]
    clicks: list[dict]
    _joins: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def load(cls, log_dir: str | Path) -> "Logs":
        log_dir = Path(log_dir)
        dpath = log_dir / DELIVERIES_LOG
        if not dpath.exists():
            raise NoLogs(f"no logs found in {log_dir}")
        cpath = log_dir / CLICKS_LOG
        clicks = list(read_jsonl(cpath)) if cpath.exists() else []
        return cls(list(read_jsonl(dpath)), clicks)


def count_bucket(used: int | None, buckets: Sequence[tuple[int, int]] = DEFAULT_BUCKETS) -> str | None:
    if used is None:
        return None
    for lo, hi in buckets:
        if lo <= used <= hi:
            return f"{lo}-{hi}"
    return None


@dataclass
class _Joined:
    # fine-grained cells over every GROUP_KEYS dimension
    cells: dict[tuple, list[int]]
    total_items: int
    total_clicks: int


def _join(logs: Logs, buckets: Sequence[tuple[int, int]]) -> _Joined:
    cache_key = tuple(map(tuple, buckets))
    if cache_key not in logs._joins:
        logs._joins[cache_key] = _join_uncached(logs, buckets)
    return logs._joins[cache_key]


def _join_uncached(logs: Logs, buckets: Sequence[tuple[int, int]]) -> _Joined:
    sizes: dict[str, int] = {}
    keys: dict[str, tuple] = {}
    cells: dict[tuple, list[int]] = defaultdict(lambda: [0, 0])
    total_items = 0
    for r in logs.deliveries:
        did = r["delivery_id"]
        if did in sizes:
            raise DataIntegrityError(f"duplicate delivery_id {did}")
        params = r.get("params") or {}
        arm = r["arm"]
        combo = params.get("combo") if arm == "keyphrases" else None
        bucket = count_bucket(params.get("used"), buckets) if arm == "keyphrases" else None
        key = (r["scenario"], arm, combo, bucket, r["timestamp"][:10])
        n = len(r["items"])
        sizes[did] = n
        keys[did] = key
        cells[key][0] += n
        total_items += n
    seen: set[tuple[str, int]] = set()
    for c in logs.clicks:
        did, rank = c["delivery_id"], int(c["rank"])
        if did not in sizes:
            raise DataIntegrityError(f"orphan click for unknown delivery {did}")
        if not 1 <= rank <= sizes[did]:
            raise DataIntegrityError(f"click rank {rank} outside delivery {did}")
        if (did, rank) in seen:
            continue
        seen.add((did, rank))
        cells[keys[did]][1] += 1
    return _Joined(dict(cells), total_items, len(seen))


def slice_ctr(
    logs: Logs, grouping: Sequence[str], buckets: Sequence[tuple[int, int]] = DEFAULT_BUCKETS
) -> dict[tuple, CtrCell]:
    """Partition delivered items by ``grouping`` (a subset of GROUP_KEYS)."""
    bad = [g for g in grouping if g not in GROUP_KEYS]
    if bad:
        raise ValueError(f"unknown grouping keys {bad}")
    idx = [GROUP_KEYS.index(g) for g in grouping]
    out: dict[tuple, CtrCell] = {}
    for key, (n, c) in _join(logs, buckets).cells.items():
        sub = tuple(key[i] for i in idx)
        cell = out.setdefault(sub, CtrCell(sub))
        cell.deliveries += n
        cell.clicks += c
    return dict(sorted(out.items(), key=lambda kv: tuple("" if v is None else str(v) for v in kv[0])))


# Rank-sum test


@dataclass(frozen=True)
class SignificanceResult:
    label_a: str
    label_b: str
    statistic: float
    p_value: float
    method: str
    sample_unit: str = SAMPLE_UNIT
    n_a: int = 0
    n_b: int = 0

    def as_dict(self) -> dict:
        return {
            "a": self.label_a, "b": self.label_b, "U": self.statistic, "p_value": self.p_value,
            "method": self.method, "sample_unit": self.sample_unit, "n_a": self.n_a, "n_b": self.n_b,
        }


def rank_data(values: Sequence[float]) -> list[float]:
    """1-based ranks, ties sharing their mean rank."""
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for k in range(i, j + 1):
            ranks[order[k]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def u_statistic(a: Sequence[float], b: Sequence[float]) -> float:
    ranks = rank_data(list(a) + list(b))
    n = len(a)
    return sum(ranks[:n]) - n * (n + 1) / 2


def exact_u_distribution(n: int, m: int) -> list[int]:
    """Counts of each U value 0..n*m under the null, by enumerating rank subsets."""
    counts = [0] * (n * m + 1)
    base = n * (n + 1) // 2
    for subset in combinations(range(1, n + m + 1), n):
        counts[sum(subset) - base] += 1
    return counts


def exact_p_value(u: float, n: int, m: int) -> float:
    counts = exact_u_distribution(n, m)
    total = sum(counts)
    u = int(round(u))
    lower = sum(counts[: u + 1]) / total
    upper = sum(counts[u:]) / total
    return min(1.0, 2 * min(lower, upper))


def normal_p_value(a: Sequence[float], b: Sequence[float]) -> float:
    """Two-sided p from the normal approximation, tie-corrected, with continuity correction."""
    n, m = len(a), len(b)
    values = list(a) + list(b)
    N = n + m
    u = u_statistic(a, b)
    ties = defaultdict(int)
    for v in values:
        ties[v] += 1
    tie_term = sum(t**3 - t for t in ties.values())
    var = n * m / 12 * ((N + 1) - tie_term / (N * (N - 1)))
    if var <= 0:
        return 1.0
    z = max(abs(u - n * m / 2) - 0.5, 0.0) / math.sqrt(var)
    return min(1.0, math.erfc(z / math.sqrt(2)))


def wilcoxon_rank_sum(
    sample_a: Sequence[float],
    sample_b: Sequence[float],
    label_a: str = "a",
    label_b: str = "b",
    sample_unit: str = SAMPLE_UNIT,
) -> SignificanceResult:
    """Two-sided rank-sum test; exact when the pooled sample is small and tie-free."""
    a, b = list(sample_a), list(sample_b)
    if not a or not b:
        raise ValueError("rank-sum test needs two non-empty samples")
    u = u_statistic(a, b)
    if len(a) + len(b) <= EXACT_LIMIT and len(set(a + b)) == len(a) + len(b):
        p, method = exact_p_value(u, len(a), len(b)), "exact"
    else:
        p, method = normal_p_value(a, b), "normal-approximation"
    return SignificanceResult(label_a, label_b, u, p, method, sample_unit, len(a), len(b))


def daily_ctr(logs: Logs, where: Mapping[str, object]) -> dict[str, float]:
    """CTR per day for the items matching ``where`` (e.g. scenario, algorithm)."""
    grouping = [*where, "day"]
    out = {}
    for key, cell in slice_ctr(logs, grouping).items():
        if tuple(key[:-1]) == tuple(where.values()) and cell.deliveries:
            out[key[-1]] = cell.ctr
    return out


def compare_daily(logs: Logs, where_a: Mapping[str, object], where_b: Mapping[str, object]) -> SignificanceResult:
    label = lambda w: ",".join(f"{k}={v}" for k, v in w.items())  # noqa: E731
    return wilcoxon_rank_sum(
        list(daily_ctr(logs, where_a).values()), list(daily_ctr(logs, where_b).values()),
        label(where_a), label(where_b),
    )


# Report


ALGORITHM_ROWS = ("embeddings", "keyphrases", "terms")


@dataclass
class TableRow:
    label: str
    algorithm: str
    combo: str | None
    cells: dict[str, CtrCell]
    markers: dict[str, str] = field(default_factory=dict)


@dataclass
class Report:
    scenarios: list[str]
    rows: list[TableRow]
    by_algorithm: dict[str, dict[str, float | None]]
    by_count: dict[str, dict[str, CtrCell]]
    significance: list[SignificanceResult]
    total_items: int
    total_clicks: int


def _table_rows() -> list[tuple[str, str, str | None]]:
    rows = [("Document Embeddings", "embeddings", None), ("Keyphrases (overall)", "keyphrases", None)]
    rows += [(f"Keyphrases ({c.label})", "keyphrases", c.key) for c in NgramCombo]
    rows.append(("Terms", "terms", None))
    return rows


def _mark(rows: list[TableRow], scenario: str) -> None:
    overall = {r.algorithm: r for r in rows if r.combo is None}
    rated = {a: r.cells[scenario].ctr for a, r in overall.items() if r.cells[scenario].ctr is not None}
    if len(rated) < 2:
        return
    # class-level best: highlight that class's strongest row; class-level worst: its overall row
    best_alg = max(ALGORITHM_ROWS, key=lambda a: (rated.get(a, -1.0), -ALGORITHM_ROWS.index(a)))
    worst_alg = min(ALGORITHM_ROWS, key=lambda a: (rated.get(a, math.inf), ALGORITHM_ROWS.index(a)))
    family = [r for r in rows if r.algorithm == best_alg and r.cells[scenario].ctr is not None]
    best_row = max(family, key=lambda r: (r.cells[scenario].ctr, -rows.index(r)))
    best_row.markers[scenario] = "best"
    if worst_alg != best_alg:
        overall[worst_alg].markers[scenario] = "worst"


def build_report(logs: Logs, buckets: Sequence[tuple[int, int]] = DEFAULT_BUCKETS) -> Report:
    joined = _join(logs, buckets)
    by_alg = slice_ctr(logs, ["scenario", "algorithm"], buckets)
    by_combo = slice_ctr(logs, ["scenario", "algorithm", "combo"], buckets)
    by_bucket = slice_ctr(logs, ["scenario", "algorithm", "count_bucket"], buckets)
    scenarios = sorted({k[0] for k in by_alg})

    rows = []
    for label, alg, combo in _table_rows():
        cells = {}
        for s in scenarios:
            src = by_alg.get((s, alg)) if combo is None else by_combo.get((s, alg, combo))
            cells[s] = src or CtrCell((s, alg, combo))
        rows.append(TableRow(label, alg, combo, cells))
    for s in scenarios:
        _mark(rows, s)

    by_algorithm = {s: {alg: (by_alg.get((s, alg)) or CtrCell(())).ctr for alg in ALGORITHM_ROWS} for s in scenarios}
    by_count = {
        s: {f"{lo}-{hi}": by_bucket.get((s, "keyphrases", f"{lo}-{hi}")) or CtrCell((s, "keyphrases", f"{lo}-{hi}"))
            for lo, hi in buckets}
        for s in scenarios
    }

    significance = []
    for sa, sb in combinations(scenarios, 2):
        for alg in ALGORITHM_ROWS:
            a = daily_ctr(logs, {"scenario": sa, "algorithm": alg})
            b = daily_ctr(logs, {"scenario": sb, "algorithm": alg})
            if a and b:
                significance.append(wilcoxon_rank_sum(list(a.values()), list(b.values()),
                                                      f"{sa}/{alg}", f"{sb}/{alg}"))
        a, b = daily_ctr(logs, {"scenario": sa}), daily_ctr(logs, {"scenario": sb})
        if a and b:
            significance.append(wilcoxon_rank_sum(list(a.values()), list(b.values()), f"{sa}/all", f"{sb}/all"))
    return Report(scenarios, rows, by_algorithm, by_count, significance, joined.total_items, joined.total_clicks)


def _cell_text(row: TableRow, scenario: str) -> str:
    text = format_pct(row.cells[scenario].ctr)
    marker = row.markers.get(scenario)
    if marker == "best":
        return f"**{text}**"
    if marker == "worst":
        return f"*{text}*"
    return text


def render_text(report: Report) -> str:
    lines = ["Click-through rates by algorithm (best class **bold**, worst *italic*)", ""]
    if not report.scenarios:
        lines.append("no data")
        return "\n".join(lines) + "\n"
    width = max(len(r.label) for r in report.rows) + 2
    lines.append("Algorithm".ljust(width) + "".join(s.ljust(14) for s in report.scenarios))
    for row in report.rows:
        lines.append(row.label.ljust(width) + "".join(_cell_text(row, s).ljust(14) for s in report.scenarios))
    lines += ["", "CTR per scenario (bar chart data)"]
    for s in report.scenarios:
        parts = ", ".join(f"{a}={format_pct(v)}" for a, v in report.by_algorithm[s].items())
        lines.append(f"  {s}: {parts}")
    lines += ["", "Keyphrase CTR by number of keyphrases used"]
    for s in report.scenarios:
        parts = ", ".join(f"{b}: {format_pct(c.ctr, 3)} ({c.clicks}/{c.deliveries})" for b, c in report.by_count[s].items())
        lines.append(f"  {s}: {parts}")
    lines += ["", f"Rank-sum tests ({SAMPLE_UNIT} samples)"]
    if not report.significance:
        lines.append("  no data")
    for r in report.significance:
        lines.append(f"  {r.label_a} vs {r.label_b}: U={r.statistic:g} p={r.p_value:.4g} "
                     f"({r.method}, n={r.n_a}/{r.n_b})")
    lines += ["", f"Total: {report.total_clicks} clicks / {report.total_items} delivered items "
                  f"= {format_pct(ctr(report.total_clicks, report.total_items), 4)}"]
    return "\n".join(lines) + "\n"


def report_records(report: Report) -> Iterator[dict]:
    for row in report.rows:
        for s in report.scenarios:
            c = row.cells[s]
            yield {"type": "table", "row": row.label, "algorithm": row.algorithm, "combo": row.combo,
                   "scenario": s, "deliveries": c.deliveries, "clicks": c.clicks, "ctr": c.ctr,
                   "marker": row.markers.get(s)}
    for s in report.scenarios:
        for alg, rate in report.by_algorithm[s].items():
            yield {"type": "algorithm_ctr", "scenario": s, "algorithm": alg, "ctr": rate}
        for bucket, c in report.by_count[s].items():
            yield {"type": "count_ctr", "scenario": s, "bucket": bucket, "deliveries": c.deliveries,
                   "clicks": c.clicks, "ctr": c.ctr}
    for r in report.significance:
        yield {"type": "significance", **r.as_dict()}
    yield {"type": "total", "deliveries": report.total_items, "clicks": report.total_clicks}


def render_svg(report: Report, out_dir: str | Path) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    paths = []
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.8 / max(len(ALGORITHM_ROWS), 1)
    for i, alg in enumerate(ALGORITHM_ROWS):
        vals = [(report.by_algorithm[s][alg] or 0.0) * 100 for s in report.scenarios]
        ax.bar([j + i * width for j in range(len(report.scenarios))], vals, width, label=alg)
    ax.set_xticks([j + width for j in range(len(report.scenarios))], report.scenarios)
    ax.set_ylabel("CTR (%)")
    ax.legend()
    paths.append(out_dir / "ctr_by_algorithm.svg")
    fig.savefig(paths[-1], metadata={"Date": None})
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(7, 4))
    for s in report.scenarios:
        buckets = list(report.by_count[s])
        ax.plot(buckets, [(c.ctr or 0.0) * 100 for c in report.by_count[s].values()], marker="o", label=s)
    ax.set_xlabel("keyphrases used")
    ax.set_ylabel("CTR (%)")
    ax.legend()
    paths.append(out_dir / "ctr_by_keyphrase_count.svg")
    fig.savefig(paths[-1], metadata={"Date": None})
    plt.close(fig)
    return paths


def write_report(report: Report, out_dir: str | Path, svg: bool = False) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    text_path, rec_path = out_dir / "report.txt", out_dir / "report.jsonl"
    text_path.write_text(render_text(report), encoding="utf-8")
    with open(rec_path, "w", encoding="utf-8") as fh:
        for rec in report_records(report):
            fh.write(json.dumps(rec) + "\n")
    paths = [text_path, rec_path]
    if svg:
        paths += render_svg(report, out_dir)
    return paths
