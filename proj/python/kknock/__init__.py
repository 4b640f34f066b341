"""Kernel knockoffs variable selection for nonparametric additive models.

Predictor indices are 0-based here; the JSON documents (``Selection.json``,
CLI output) use 1-based indices.
"""

import json

import numpy as np

from ._core import (
    SCHEMA_VERSION,
    ConfigError,
    DataError,
    SelectionResult,
    __version__,
    choose_r,
    group_lasso,
    kernel,
    knockoff_threshold,
    knockoffs,
    metrics,
    random_features,
)
from . import _core

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "DataError",
    "Selection",
    "SelectionResult",
    "__version__",
    "bench",
    "choose_r",
    "group_lasso",
    "kernel",
    "knockoff_threshold",
    "knockoffs",
    "metrics",
    "random_features",
    "select",
    "simulate",
    "tune",
]


def _arrays(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2:
        raise ConfigError("X must be a 2-d array")
    return X, y


_SELECTOR_KEYS = {
    "q", "L", "kernel", "kernel_scale", "r", "xi", "tau", "retune_tau_each_rep",
    "filter", "plus", "selector_seed", "ridge", "pilot_L", "tau_grid_size",
    "tau_grid_ratio", "folds", "subsample_fraction", "shared_features",
    "max_iter", "tol",
}


def _selector_json(config):
    config = dict(config)
    if "seed" in config:
        config["selector_seed"] = config.pop("seed")
    unknown = sorted(set(config) - _SELECTOR_KEYS)
    if unknown:
        raise ConfigError("unknown selector option(s): " + ", ".join(unknown))
    return json.dumps(config)


class Selection:
    """Result of :func:`select`: the core result plus its JSON document."""

    def __init__(self, result, document):
        self.result = result
        self.json = document

    def __getattr__(self, name):
        return getattr(self.result, name)

    def to_dict(self):
        return json.loads(self.json)

    def __repr__(self):
        return f"Selection(selected={list(self.result.selected)})"


def select(X, y, *, jobs=0, timing=True, **config):
    """Run the selector. Keyword options use the manifest key names
    (q, L, kernel, kernel_scale, r, xi, tau, filter, seed, ...)."""
    X, y = _arrays(X, y)
    res, doc = _core._select(X, y, _selector_json(config), int(jobs), bool(timing))
    return Selection(res, doc)


def tune(X, y, *, jobs=0, **config):
    """Rank and penalty tuning report as a dict."""
    X, y = _arrays(X, y)
    return json.loads(_core._tune(X, y, _selector_json(config), int(jobs)))


def simulate(rep=0, **config):
    """Draw a dataset; returns (X, y, support, coefficients)."""
    X, y, support, coef = _core._simulate(json.dumps(config), int(rep))
    return X, y, list(support), list(coef)


def bench(manifest, *, jobs=0, timing=True):
    """Run a benchmark manifest (dict or path); returns the results CSV text."""
    if not isinstance(manifest, dict):
        with open(manifest) as fh:
            manifest = json.load(fh)
    return _core._bench(json.dumps(manifest), int(jobs), bool(timing))
