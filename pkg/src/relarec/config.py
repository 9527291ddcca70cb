"""Declarative configuration.

One YAML (or JSON) file holds every knob; environment variables of the
form ``RELAREC__SECTION__KEY=value`` override individual entries, e.g.
``RELAREC__ARMS__TERMS=0.5`` or ``RELAREC__SEED=7``. Values are parsed as
YAML scalars. The config path itself may come from ``RELAREC_CONFIG``.

Keys (defaults in parentheses)::

    seed (0)
    corpus_tags ([sowiport, core])
    stopwords_file (null: built-in list)
    scenarios: list of {name, corpus: [tags], max_items (6)}
        (sowiport -> [sowiport]; jabref -> [sowiport, core])
    arms: {terms: 0.95, keyphrases: 0.03, embeddings: 0.02}
    keyphrase_arm: {combo_weights ({}: uniform over the 7 combos),
                    random_count_prob (0.5), count_min (1), count_max (19)}
    terms: {min_term_freq (2), min_doc_freq (5), max_query_terms (25),
            include_keywords (false)}
    keyphrases: {weights: {depth 0, height 0, lifespan 0, frequency 0.1,
                 noun_value 0.6, maximality 0.4}, max_skip (1)}
    embeddings: {dim (100), epochs (20), negative (5), min_count (2),
                 alpha (0.025), min_alpha (0.0001), seed (0), parallel (false)}
    simulator: {base_rates: {terms 0.002, keyphrases 0.004, embeddings 0.003},
                scenario_multipliers ({}), position_decay (0.6),
                scenario_weights ({}: uniform), days (30),
                start ("2017-03-01")}
    analytics: {count_buckets ([[1,3],[4,7],[8,11],[12,19]])}
"""

from __future__ import annotations

import copy
import os
from pathlib import Path
from typing import Any, Mapping

import yaml

ENV_CONFIG = "RELAREC_CONFIG"
ENV_PREFIX = "RELAREC__"

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "corpus_tags": ["sowiport", "core"],
    "stopwords_file": None,
    "scenarios": [
        {"name": "sowiport", "corpus": ["sowiport"], "max_items": 6},
        {"name": "jabref", "corpus": ["sowiport", "core"], "max_items": 6},
    ],
    "arms": {"terms": 0.95, "keyphrases": 0.03, "embeddings": 0.02},
    "keyphrase_arm": {"combo_weights": {}, "random_count_prob": 0.5, "count_min": 1, "count_max": 19},
    "terms": {"min_term_freq": 2, "min_doc_freq": 5, "max_query_terms": 25, "include_keywords": False},
    "keyphrases": {
        "weights": {"depth": 0.0, "height": 0.0, "lifespan": 0.0,
                    "frequency": 0.10, "noun_value": 0.60, "maximality": 0.40},
        "max_skip": 1,
    },
    "embeddings": {"dim": 100, "epochs": 20, "negative": 5, "min_count": 2,
                   "alpha": 0.025, "min_alpha": 0.0001, "seed": 0, "parallel": False},
    "simulator": {
        "base_rates": {"terms": 0.002, "keyphrases": 0.004, "embeddings": 0.003},
        "scenario_multipliers": {},
        "position_decay": 0.6,
        "scenario_weights": {},
        "days": 30,
        "start": "2017-03-01",
    },
    "analytics": {"count_buckets": [[1, 3], [4, 7], [8, 11], [12, 19]]},
}


def merge(base: dict, override: Mapping) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def env_overrides(environ: Mapping[str, str]) -> dict:
    overrides: dict = {}
    for name, raw in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        path = [p.lower() for p in name[len(ENV_PREFIX):].split("__") if p]
        if not path:
            continue
        node = overrides
        for part in path[:-1]:
            node = node.setdefault(part, {})
        node[path[-1]] = yaml.safe_load(raw)
    return overrides


def load_config(path: str | Path | None = None, environ: Mapping[str, str] | None = None) -> dict:
    environ = os.environ if environ is None else environ
    path = path or environ.get(ENV_CONFIG)
    config = copy.deepcopy(DEFAULTS)
    if path:
        with open(path, encoding="utf-8") as fh:
            config = merge(config, yaml.safe_load(fh) or {})
    return merge(config, env_overrides(environ))
