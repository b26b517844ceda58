"""Goodness-of-fit metrics for an (observed, predicted) series pair."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .fitting import aic as _aic

__all__ = ["METRIC_NAMES", "MetricsReport", "evaluate"]

METRIC_NAMES = (
    "r2",
    "mae",
    "mse",
    "rmse",
    "explained_variance",
    "max_error",
    "msle",
    "median_absolute_error",
    "median_absolute_percentage_error",
    "aic",
)


@dataclass(frozen=True)
class MetricsReport:
    r2: float
    mae: float
    mse: float
    rmse: float
    explained_variance: float
    max_error: float
    msle: float
    median_absolute_error: float
    median_absolute_percentage_error: float
    aic: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        # non-finite values (aic of a perfect fit) are written as strings
        clean = {k: v if math.isfinite(v) else repr(v) for k, v in self.to_dict().items()}
        return json.dumps(clean, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["metric", "value"])
        for f in fields(self):
            w.writerow([f.name, repr(float(getattr(self, f.name)))])
        return buf.getvalue()


def _safe_ratio(num, den):
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den


def evaluate(y_true, y_pred, n_varys: int = 0) -> MetricsReport:
    """Score ``y_pred`` against ``y_true``.

    The median absolute percentage error skips points where the truth is
    exactly zero; it is nan when every truth is zero. ``r2`` and
    ``explained_variance`` are 1 for a perfect fit of a constant series and
    ``-inf`` for an imperfect one.
    """
    y = np.asarray(y_true, dtype=np.float64).ravel()
    yhat = np.asarray(y_pred, dtype=np.float64).ravel()
    if y.size != yhat.size:
        raise ValueError(f"length mismatch: {y.size} observed vs {yhat.size} predicted")
    if y.size < 2:
        raise ValueError("need at least two points")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(yhat))):
        raise ValueError("series contain non-finite values")
    if np.any(y <= -1.0) or np.any(yhat <= -1.0):
        raise ValueError("msle is undefined for values <= -1")
    if n_varys < 0:
        raise ValueError("n_varys must be non-negative")

    err = y - yhat
    abs_err = np.abs(err)
    ss_res = float(np.sum(err**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    mse = ss_res / y.size
    nz = y != 0.0
    mdape = float(np.median(abs_err[nz] / np.abs(y[nz])) * 100.0) if nz.any() else math.nan
    return MetricsReport(
        r2=1.0 - _safe_ratio(ss_res, ss_tot),
        mae=float(abs_err.mean()),
        mse=mse,
        rmse=math.sqrt(mse),
        explained_variance=1.0 - _safe_ratio(float(np.var(err)), float(np.var(y))),
        max_error=float(abs_err.max()),
        msle=float(np.mean((np.log1p(y) - np.log1p(yhat)) ** 2)),
        median_absolute_error=float(np.median(abs_err)),
        median_absolute_percentage_error=mdape,
        aic=_aic(y.size, ss_res, n_varys),
    )
