"""JSON pipeline configuration.

Schema (every key optional; unknown keys are rejected)::

    {
      "seed": 0,
      "preprocess": {"median": true, "normalize": true, "equalize": false},
      "segmentation": {"otsu": true, "threshold": null, "squared_variance": false},
      "network": {"input_size": 143, "conv_filters": [52, 256, 156],
                  "conv_kernels": [7, 5, 3], "conv_stride": 2, "pool_window": 3,
                  "pool_stride": 2, "fc_units": 512, "dropout": 0.5},
      "optimizer": {"population": 30, "max_iterations": 500, "hho_fraction": 0.5,
                    "beta": 1.5, "extended_head": false, "batch_size": 1024,
                    "bound": 1.0},
      "augmentation": {"enabled": false, "ops": [...], "include_original": true},
      "split": {"train_fraction": 0.7},
      "input": {"data_dir": null, "labels_file": null}
    }
"""

from __future__ import annotations

import copy
import json
from pathlib import Path

from ghho.data import DEFAULT_RECIPE
from ghho.network import NetworkSpec, build_spec
from ghho.optimizer import RunConfig
from ghho.pipeline import PipelineOptions
from ghho.segmentation import PreprocessOptions

DEFAULTS = {
    "seed": 0,
    "preprocess": {"median": True, "normalize": True, "equalize": False},
    "segmentation": {"otsu": True, "threshold": None, "squared_variance": False},
    "network": {"input_size": 143, "conv_filters": [52, 256, 156], "conv_kernels": [7, 5, 3],
                "conv_stride": 2, "pool_window": 3, "pool_stride": 2, "fc_units": 512,
                "dropout": 0.5},
    "optimizer": {"population": 30, "max_iterations": 500, "hho_fraction": 0.5, "beta": 1.5,
                  "extended_head": False, "batch_size": 1024, "bound": 1.0},
    "augmentation": {"enabled": False, "ops": list(DEFAULT_RECIPE), "include_original": True},
    "split": {"train_fraction": 0.7},
    "input": {"data_dir": None, "labels_file": None},
}


class ConfigError(ValueError):
    pass


def _merge(defaults: dict, given: dict, where: str) -> dict:
    if not isinstance(given, dict):
        raise ConfigError(f"{where or 'config'} must be an object")
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        path = f"{where}.{key}" if where else key
        if key not in defaults:
            raise ConfigError(f"unknown config key {path!r}")
        if isinstance(defaults[key], dict):
            out[key] = _merge(defaults[key], value, path)
        else:
            out[key] = value
    return out


def load_config(path=None, overrides: dict | None = None) -> dict:
    given = {}
    if path is not None:
        try:
            given = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = _merge(DEFAULTS, given, "")
    if overrides:
        cfg = _merge(cfg, overrides, "")
    return cfg


def pipeline_options(cfg: dict) -> PipelineOptions:
    seg = cfg["segmentation"]
    return PipelineOptions(PreprocessOptions(**cfg["preprocess"]), seg["otsu"], seg["threshold"],
                           seg["squared_variance"])


def network_spec(cfg: dict) -> NetworkSpec:
    return build_spec(**cfg["network"])


def run_config(cfg: dict, workers: int = 1) -> RunConfig:
    o = cfg["optimizer"]
    return RunConfig(population=o["population"], max_iterations=o["max_iterations"],
                     seed=cfg["seed"], hho_fraction=o["hho_fraction"], beta=o["beta"],
                     workers=workers)
