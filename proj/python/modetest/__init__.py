"""Multimodality tests for univariate data."""

import json

from . import _core
from ._core import (
    BracketError,
    ConstructionError,
    Error,
    InvalidArgument,
    TieError,
    count_modes,
    critical_bandwidth,
    delta_statistic,
    dip_statistic,
    hy_critical_bandwidth,
    kde_density,
    model_density,
    model_sample,
)

__version__ = _core.__version__


def run_test(method, data, k=1, B=500, seed=1, workers=1, support=None, interval=None,
             em_mode="exact", raw_pvalue=False):
    """Run one test and return the outcome as a dict (same layout as the CLI report)."""
    text = _core.run_test_json(method, list(map(float, data)), k, B, seed, workers,
                               support, interval, em_mode, raw_pvalue)
    return json.loads(text)


def calibration(data, k, support=None, points=512):
    """Piecewise structure and plot series of the calibration density."""
    return json.loads(_core.calibration_json(list(map(float, data)), k, support, points))


def model_catalog():
    return json.loads(_core.model_catalog_json())


__all__ = [
    "BracketError",
    "ConstructionError",
    "Error",
    "InvalidArgument",
    "TieError",
    "calibration",
    "count_modes",
    "critical_bandwidth",
    "delta_statistic",
    "dip_statistic",
    "hy_critical_bandwidth",
    "kde_density",
    "model_catalog",
    "model_density",
    "model_sample",
    "run_test",
]
