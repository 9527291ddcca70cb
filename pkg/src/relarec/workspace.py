"""On-disk layout of a working directory and the build steps that fill it.

::

    <root>/corpus/                       document store
    <root>/indexes/<scenario>/terms.idx
    <root>/indexes/<scenario>/keyphrases.idx
    <root>/indexes/<scenario>/keyphrases.ndjson   inspection dump
    <root>/indexes/<scenario>/embeddings.model
    <root>/logs/deliveries.log, clicks.log
    <root>/engine_state.json             arm-assignment RNG state
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Iterable, Mapping

from .corpus import CorpusStore
from .embeddings import EmbeddingModel, EmbeddingParams, load_model, save_model, train_embeddings
from .experiment import Engine, ExperimentConfig, ScenarioModels
from .keyphrases import (
    FeatureWeights,
    KeyphraseConfig,
    KeyphraseIndex,
    index_keyphrases,
    load_keyphrase_index,
    save_keyphrase_index,
)
from .terms import InvertedIndex, build_index, load_index, save_index
from .textpipe import DEFAULT_STOPWORDS, load_stopwords

log = logging.getLogger(__name__)

ALGO_STEPS = {
    "terms": "relarec index --algo terms",
    "keyphrases": "relarec index --algo keyphrase",
    "embeddings": "relarec train-embeddings",
}


class MissingArtifact(RuntimeError):
    pass


class Workspace:
    def __init__(self, root: str | Path, config: Mapping):
        self.root = Path(root)
        self.config = config
        self.experiment = ExperimentConfig.from_dict(config)
        sw = config.get("stopwords_file")
        self.stopwords = load_stopwords(sw) if sw else DEFAULT_STOPWORDS

    @property
    def corpus_dir(self) -> Path:
        return self.root / "corpus"

    @property
    def log_dir(self) -> Path:
        return self.root / "logs"

    @property
    def state_path(self) -> Path:
        return self.root / "engine_state.json"

    def scenario_dir(self, scenario: str) -> Path:
        return self.root / "indexes" / scenario

    def artifact_path(self, scenario: str, algo: str) -> Path:
        name = {"terms": "terms.idx", "keyphrases": "keyphrases.idx", "embeddings": "embeddings.model"}[algo]
        return self.scenario_dir(scenario) / name

    def store(self) -> CorpusStore:
        return CorpusStore(self.corpus_dir, self.config["corpus_tags"])

    def _require_corpus(self) -> CorpusStore:
        store = self.store()
        if len(store) == 0:
            raise MissingArtifact("corpus is empty; run `relarec ingest <file>` first")
        return store

    def scenario_names(self, only: Iterable[str] | None = None) -> list[str]:
        names = [s.name for s in self.experiment.scenarios]
        if only:
            unknown = set(only) - set(names)
            if unknown:
                raise KeyError(f"unknown scenarios {sorted(unknown)}")
            names = [n for n in names if n in set(only)]
        return names

    def keyphrase_config(self) -> KeyphraseConfig:
        kp = self.config.get("keyphrases", {})
        return KeyphraseConfig(weights=FeatureWeights(**kp.get("weights", {})),
                               max_skip=int(kp.get("max_skip", 1)), stopwords=self.stopwords)

    def embedding_params(self, seed: int | None = None) -> EmbeddingParams:
        p = dict(self.config.get("embeddings", {}))
        if seed is not None:
            p["seed"] = seed
        return EmbeddingParams(**p)

    def build_terms(self, scenarios: Iterable[str] | None = None) -> dict[str, InvertedIndex]:
        store = self._require_corpus()
        include_kw = bool(self.config.get("terms", {}).get("include_keywords", False))
        out = {}
        for name in self.scenario_names(scenarios):
            sc = self.experiment.scenario(name)
            index = build_index(store.iterate(sc.corpus), include_keywords=include_kw, stopwords=self.stopwords)
            path = self.artifact_path(name, "terms")
            path.parent.mkdir(parents=True, exist_ok=True)
            save_index(index, path)
            log.info("%s: indexed %d documents, %d terms", name, index.doc_count, len(index.postings))
            out[name] = index
        return out

    def build_keyphrases(self, scenarios: Iterable[str] | None = None, dump=None) -> dict[str, KeyphraseIndex]:
        store = self._require_corpus()
        cfg = self.keyphrase_config()
        out = {}
        for name in self.scenario_names(scenarios):
            sc = self.experiment.scenario(name)
            index = index_keyphrases(store.iterate(sc.corpus), cfg)
            path = self.artifact_path(name, "keyphrases")
            path.parent.mkdir(parents=True, exist_ok=True)
            save_keyphrase_index(index, path)
            with open(path.with_suffix(".ndjson"), "w", encoding="utf-8") as fh:
                for rec in index.dump_records():
                    line = json.dumps({"scenario": name, **rec})
                    fh.write(line + "\n")
                    if dump is not None:
                        dump.write(line + "\n")
            out[name] = index
        return out

    def train_embeddings(self, scenarios: Iterable[str] | None = None, seed: int | None = None) -> dict[str, EmbeddingModel]:
        store = self._require_corpus()
        params = self.embedding_params(seed)
        out = {}
        for name in self.scenario_names(scenarios):
            sc = self.experiment.scenario(name)
            model = train_embeddings(store.iterate(sc.corpus), params, self.stopwords)
            path = self.artifact_path(name, "embeddings")
            path.parent.mkdir(parents=True, exist_ok=True)
            save_model(model, path)
            log.info("%s: trained %d vectors, final loss %.4f", name, len(model.doc_ids), model.loss_history[-1])
            out[name] = model
        return out

    def load_models(self) -> dict[str, ScenarioModels]:
        """Load every artifact the configured arms need, or name the step that is missing."""
        loaders = {"terms": load_index, "keyphrases": load_keyphrase_index, "embeddings": load_model}
        needed = ["terms"] + [a for a in ("keyphrases", "embeddings") if a in self.experiment.arm_weights]
        models = {}
        for name in self.scenario_names():
            loaded = {}
            for algo in needed:
                path = self.artifact_path(name, algo)
                if not path.exists():
                    raise MissingArtifact(f"missing {algo} artifact for scenario {name!r}; run `{ALGO_STEPS[algo]}` first")
                loaded[algo] = loaders[algo](path)
            models[name] = ScenarioModels(**loaded)
        return models

    def engine(self, log_dir: str | Path | None = None, persist_state: bool = True, **kwargs) -> Engine:
        return Engine(self.experiment, self.load_models(), log_dir=log_dir or self.log_dir,
                      state_path=self.state_path if persist_state else None, **kwargs)
