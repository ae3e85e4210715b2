"""Device-free intrusion detection over WLAN RSS with multi-kernel transfer."""

import json

from ._core import (
    ConfigError,
    RankError,
    build_L_total,
    median_distance,
    metrics,
    mixed_mmd,
    multi_gram,
    solve_transfer,
)
from ._core import default_config as _default_config
from ._core import run_pipeline as _run_pipeline

__all__ = [
    "ConfigError",
    "RankError",
    "build_L_total",
    "default_config",
    "median_distance",
    "metrics",
    "mixed_mmd",
    "multi_gram",
    "run_pipeline",
    "solve_transfer",
]


def default_config():
    return json.loads(_default_config())


def run_pipeline(config=None, seed=None):
    text = "" if config is None else json.dumps(config)
    out = _run_pipeline(text, seed)
    out["report"] = json.loads(out["report"])
    return out
