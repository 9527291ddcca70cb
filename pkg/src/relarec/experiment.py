"""Arm assignment, delivery, click logging and the synthetic-click simulator."""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping, Protocol

import numpy as np

from .corpus import DocumentNotFound
from .embeddings import EmbeddingModel, recommend_embeddings
from .keyphrases import MAX_KEYPHRASES, Count, KeyphraseIndex, NgramCombo, query_keyphrases, recommend_keyphrases
from .terms import InvertedIndex, MoreLikeThisParams, recommend_terms

log = logging.getLogger(__name__)

ARMS = ("terms", "keyphrases", "embeddings")
DELIVERIES_LOG = "deliveries.log"
CLICKS_LOG = "clicks.log"


class NoRecommendations(RuntimeError):
    pass


class UnknownDelivery(KeyError):
    pass


class InvalidRank(ValueError):
    pass


class UniformSource(Protocol):
    def random(self) -> float: ...


@dataclass(frozen=True)
class Scenario:
    name: str
    corpus: tuple[str, ...]
    max_items: int = 6

    def __post_init__(self) -> None:
        if self.max_items < 1:
            raise ValueError("max_items must be >= 1")


@dataclass(frozen=True)
class KeyphraseArmConfig:
    combo_weights: tuple[float, ...] = (1.0,) * 7
    random_count_prob: float = 0.5
    count_min: int = 1
    count_max: int = MAX_KEYPHRASES


@dataclass(frozen=True)
class ExperimentConfig:
    arm_weights: Mapping[str, float] = field(
        default_factory=lambda: {"terms": 0.95, "keyphrases": 0.03, "embeddings": 0.02}
    )
    scenarios: tuple[Scenario, ...] = (
        Scenario("sowiport", ("sowiport",)),
        Scenario("jabref", ("sowiport", "core")),
    )
    keyphrase: KeyphraseArmConfig = KeyphraseArmConfig()
    mlt: MoreLikeThisParams = MoreLikeThisParams()
    seed: int = 0

    def __post_init__(self) -> None:
        unknown = set(self.arm_weights) - set(ARMS)
        if unknown:
            raise ValueError(f"unknown arms {sorted(unknown)}")
        weights = list(self.arm_weights.values())
        if any(w <= 0 for w in weights):
            raise ValueError("arm weights must be positive")
        if abs(sum(weights) - 1.0) > 1e-9:
            raise ValueError(f"arm weights must sum to 1, got {sum(weights)}")

    def scenario(self, name: str) -> Scenario:
        for s in self.scenarios:
            if s.name == name:
                return s
        raise KeyError(name)

    @classmethod
    def from_dict(cls, cfg: Mapping) -> "ExperimentConfig":
        kp = cfg.get("keyphrase_arm", {})
        combo_w = kp.get("combo_weights") or {}
        combo_weights = tuple(float(combo_w.get(c.key, 1.0 if not combo_w else 0.0)) for c in NgramCombo)
        t = cfg.get("terms", {})
        return cls(
            arm_weights={k: float(v) for k, v in cfg["arms"].items() if float(v) > 0},
            scenarios=tuple(Scenario(s["name"], tuple(s["corpus"]), int(s.get("max_items", 6)))
                            for s in cfg["scenarios"]),
            keyphrase=KeyphraseArmConfig(combo_weights, float(kp.get("random_count_prob", 0.5)),
                                         int(kp.get("count_min", 1)), int(kp.get("count_max", MAX_KEYPHRASES))),
            mlt=MoreLikeThisParams(t.get("min_term_freq", 2), t.get("min_doc_freq", 5), t.get("max_query_terms", 25)),
            seed=int(cfg.get("seed", 0)),
        )


@dataclass(frozen=True)
class ArmChoice:
    arm: str
    combo: NgramCombo | None = None
    count: Count | None = None

    def params(self) -> dict | None:
        if self.arm != "keyphrases":
            return None
        return {"combo": self.combo.key, "count": self.count}


def _categorical(u: float, weights: Iterable[float]) -> int:
    weights = list(weights)
    total = sum(weights)
    acc = 0.0
    last = 0
    for i, w in enumerate(weights):
        if w <= 0:
            continue
        acc += w / total
        last = i
        if u < acc:
            return i
    return last


def assign_arm(config: ExperimentConfig, rng: UniformSource) -> ArmChoice:
    """Draw an arm from cumulative weight intervals (terms first), plus keyphrase sub-parameters."""
    arms = [a for a in ARMS if a in config.arm_weights]
    arm = arms[_categorical(rng.random(), [config.arm_weights[a] for a in arms])]
    if arm != "keyphrases":
        return ArmChoice(arm)
    kp = config.keyphrase
    combo = list(NgramCombo)[_categorical(rng.random(), kp.combo_weights)]
    if rng.random() < kp.random_count_prob:
        span = kp.count_max - kp.count_min + 1
        count: Count = kp.count_min + min(int(rng.random() * span), span - 1)
    else:
        count = "all"
    return ArmChoice(arm, combo, count)


@dataclass
class DeliveryRecord:
    delivery_id: str
    scenario: str
    doc_id: str
    arm: str
    params: dict | None
    items: list[str]
    timestamp: str
    fallback: bool = False
    requested_arm: str | None = None
    scores: list[float] = field(default_factory=list, repr=False, compare=False)

    def to_record(self) -> dict:
        return {
            "delivery_id": self.delivery_id,
            "scenario": self.scenario,
            "doc_id": self.doc_id,
            "arm": self.arm,
            "params": self.params,
            "items": self.items,
            "timestamp": self.timestamp,
            "fallback": self.fallback,
            "requested_arm": self.requested_arm,
        }

    @classmethod
    def from_record(cls, r: Mapping) -> "DeliveryRecord":
        return cls(r["delivery_id"], r["scenario"], r["doc_id"], r["arm"], r.get("params"), list(r["items"]),
                   r["timestamp"], bool(r.get("fallback", False)), r.get("requested_arm"))


@dataclass(frozen=True)
class ClickEvent:
    delivery_id: str
    rank: int
    timestamp: str

    def to_record(self) -> dict:
        return {"delivery_id": self.delivery_id, "rank": self.rank, "timestamp": self.timestamp}


@dataclass
class ScenarioModels:
    terms: InvertedIndex
    keyphrases: KeyphraseIndex | None = None
    embeddings: EmbeddingModel | None = None


def read_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield json.loads(line)


def _utc_now() -> datetime:
    return datetime.now(timezone.utc)


def _iso(ts: datetime) -> str:
    return ts.isoformat(timespec="seconds")


class Engine:
    """Serves deliveries for every configured scenario and owns the two logs.

    Models are treated as read-only. Appends to the logs and delivery-id
    generation go through one lock, so request handlers may call
    :meth:`deliver` and :meth:`record_click` concurrently.
    """

    def __init__(
        self,
        config: ExperimentConfig,
        models: Mapping[str, ScenarioModels],
        log_dir: str | Path | None = None,
        rng: np.random.Generator | None = None,
        clock: Callable[[], datetime] = _utc_now,
        state_path: str | Path | None = None,
    ):
        self.config = config
        self.models = dict(models)
        self.clock = clock
        self.state_path = Path(state_path) if state_path else None
        self.rng = rng if rng is not None else np.random.default_rng(config.seed)
        if self.state_path and self.state_path.exists():
            self.rng.bit_generator.state = json.loads(self.state_path.read_text())
        self._lock = threading.Lock()
        self._deliveries: dict[str, int] = {}
        self._clicks: set[tuple[str, int]] = set()
        self.log_dir = Path(log_dir) if log_dir else None
        self._dlog = self._clog = None
        if self.log_dir:
            self.log_dir.mkdir(parents=True, exist_ok=True)
            dpath, cpath = self.log_dir / DELIVERIES_LOG, self.log_dir / CLICKS_LOG
            if dpath.exists():
                for r in read_jsonl(dpath):
                    self._deliveries[r["delivery_id"]] = len(r["items"])
            if cpath.exists():
                for r in read_jsonl(cpath):
                    self._clicks.add((r["delivery_id"], int(r["rank"])))
            self._dlog = open(dpath, "a", encoding="utf-8")
            self._clog = open(cpath, "a", encoding="utf-8")
        self._seq = len(self._deliveries)
        self.recommend = lru_cache(maxsize=500_000)(self._recommend)

    def close(self) -> None:
        with self._lock:
            self.save_state()
            for fh in (self._dlog, self._clog):
                if fh:
                    fh.close()
            self._dlog = self._clog = None

    def __enter__(self) -> "Engine":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def save_state(self) -> None:
        if self.state_path:
            self.state_path.write_text(json.dumps(self.rng.bit_generator.state))

    @property
    def delivery_count(self) -> int:
        return len(self._deliveries)

    @property
    def click_count(self) -> int:
        return len(self._clicks)

    def _recommend(self, scenario: str, doc_id: str, choice: ArmChoice, k: int) -> tuple[tuple[str, float], ...]:
        m = self.models[scenario]
        if choice.arm == "terms":
            return tuple(recommend_terms(doc_id, m.terms, self.config.mlt, k))
        if choice.arm == "keyphrases":
            if m.keyphrases is None or doc_id not in m.keyphrases:
                return ()
            return tuple(recommend_keyphrases(doc_id, m.keyphrases, choice.combo, choice.count, k))
        if choice.arm == "embeddings":
            if m.embeddings is None or doc_id not in m.embeddings:
                return ()
            return tuple(recommend_embeddings(doc_id, m.embeddings, k))
        raise ValueError(f"unknown arm {choice.arm!r}")

    def deliver(
        self, scenario: str, doc_id: str, k: int | None = None, timestamp: datetime | None = None
    ) -> DeliveryRecord:
        try:
            sc = self.config.scenario(scenario)
        except KeyError:
            raise KeyError(f"unknown scenario {scenario!r}") from None
        models = self.models.get(scenario)
        if models is None:
            raise RuntimeError(f"no models loaded for scenario {scenario!r}")
        if doc_id not in models.terms:
            raise DocumentNotFound(doc_id)
        k = sc.max_items if k is None else max(1, min(k, sc.max_items))
        with self._lock:
            choice = assign_arm(self.config, self.rng)
        items = self.recommend(scenario, doc_id, choice, k)
        requested = choice.arm
        fallback = False
        if not items and choice.arm != "terms":
            fallback = True
            choice = ArmChoice("terms")
            items = self.recommend(scenario, doc_id, choice, k)
        if not items:
            raise NoRecommendations(f"no recommendations for {doc_id!r} in {scenario!r}")
        params = choice.params()
        if params is not None:
            params["used"] = len(query_keyphrases(doc_id, models.keyphrases, choice.combo, choice.count))
        with self._lock:
            self._seq += 1
            record = DeliveryRecord(
                delivery_id=f"dlv-{self._seq:09d}",
                scenario=scenario,
                doc_id=doc_id,
                arm=choice.arm,
                params=params,
                items=[d for d, _ in items[: sc.max_items]],
                timestamp=_iso(timestamp or self.clock()),
                fallback=fallback,
                requested_arm=requested if fallback else None,
                scores=[s for _, s in items[: sc.max_items]],
            )
            self._deliveries[record.delivery_id] = len(record.items)
            if self._dlog:
                self._dlog.write(json.dumps(record.to_record()) + "\n")
                self._dlog.flush()
            self.save_state()
        return record

    def record_click(self, delivery_id: str, rank: int, timestamp: datetime | None = None) -> bool:
        """Append a click; returns False when the (delivery, rank) pair was already logged."""
        with self._lock:
            n_items = self._deliveries.get(delivery_id)
            if n_items is None:
                raise UnknownDelivery(delivery_id)
            if isinstance(rank, bool) or not isinstance(rank, int) or not 1 <= rank <= n_items:
                raise InvalidRank(f"rank {rank!r} outside 1..{n_items}")
            key = (delivery_id, rank)
            if key in self._clicks:
                return False
            self._clicks.add(key)
            if self._clog:
                event = ClickEvent(delivery_id, rank, _iso(timestamp or self.clock()))
                self._clog.write(json.dumps(event.to_record()) + "\n")
                self._clog.flush()
            return True


@dataclass(frozen=True)
class UserModel:
    """Click probability = base rate(arm) x scenario multiplier x decay**(rank - 1)."""

    base_rates: Mapping[str, float]
    scenario_multipliers: Mapping[str, float] = field(default_factory=dict)
    position_decay: float = 0.6

    def click_prob(self, arm: str, scenario: str, rank: int) -> float:
        p = self.base_rates.get(arm, 0.0) * self.scenario_multipliers.get(scenario, 1.0)
        return min(1.0, p * self.position_decay ** (rank - 1))

    @classmethod
    def from_dict(cls, sim: Mapping) -> "UserModel":
        return cls(dict(sim.get("base_rates", {})), dict(sim.get("scenario_multipliers", {})),
                   float(sim.get("position_decay", 0.6)))


@dataclass
class SimulationSummary:
    requests: int = 0
    deliveries: int = 0
    items: int = 0
    clicks: int = 0
    fallbacks: int = 0
    failures: int = 0


def simulate(
    engine: Engine,
    user_model: UserModel,
    n_requests: int,
    seed: int,
    days: int = 30,
    start: datetime = datetime(2017, 3, 1, tzinfo=timezone.utc),
    scenario_weights: Mapping[str, float] | None = None,
) -> SimulationSummary:
    """Drive ``n_requests`` deliveries over uniformly drawn query documents.

    Simulated timestamps are spread evenly over ``days`` days from
    ``start`` so per-day analytics have data. The engine's arm-assignment
    RNG is reseeded from ``seed`` so the two logs depend only on
    (seed, corpus, models, config).
    """
    engine_seq, click_seq = np.random.SeedSequence(seed).spawn(2)
    engine.rng = np.random.default_rng(engine_seq)
    rng = np.random.default_rng(click_seq)
    scenarios = [s.name for s in engine.config.scenarios if s.name in engine.models]
    weights = np.array([(scenario_weights or {}).get(s, 1.0) for s in scenarios], dtype=float)
    weights /= weights.sum()
    pools = {s: sorted(engine.models[s].terms.field_length) for s in scenarios}
    step = timedelta(days=days) / max(n_requests, 1)
    summary = SimulationSummary()
    for i in range(n_requests):
        scenario = scenarios[int(rng.choice(len(scenarios), p=weights))] if len(scenarios) > 1 else scenarios[0]
        pool = pools[scenario]
        doc_id = pool[int(rng.integers(len(pool)))]
        ts = start + step * i
        summary.requests += 1
        try:
            record = engine.deliver(scenario, doc_id, timestamp=ts)
        except NoRecommendations:
            summary.failures += 1
            continue
        summary.deliveries += 1
        summary.items += len(record.items)
        summary.fallbacks += record.fallback
        draws = rng.random(len(record.items))
        for rank, u in enumerate(draws, start=1):
            if u < user_model.click_prob(record.arm, scenario, rank):
                engine.record_click(record.delivery_id, rank, timestamp=ts)
                summary.clicks += 1
    log.info("simulated %s", summary)
    return summary
