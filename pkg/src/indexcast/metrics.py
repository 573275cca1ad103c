"""Forecast error metrics.

Note the two percentage metrics are deliberately asymmetric: the maximum
percentage error divides by the predicted value, the mean percentage error
divides by the actual value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _pair(actual, predicted):
    a = np.asarray(actual, dtype=float).ravel()
    p = np.asarray(predicted, dtype=float).ravel()
    if a.shape != p.shape:
        raise ValueError(f"length mismatch: actual {a.shape[0]} vs predicted {p.shape[0]}")
    if a.size == 0:
        raise ValueError("empty input")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(p))):
        raise ValueError("non-finite values in input")
    return a, p


def rmse(actual, predicted) -> float:
    a, p = _pair(actual, predicted)
    return float(np.sqrt(np.mean((a - p) ** 2)))


def max_abs_percent_error(actual, predicted) -> float:
    """Largest |actual - predicted| / |predicted| * 100 over the series."""
    a, p = _pair(actual, predicted)
    if np.any(p == 0):
        raise ValueError("predicted value of 0 makes the percentage undefined")
    return float(np.max(np.abs(a - p) / np.abs(p)) * 100.0)


def mean_abs_percent_error(actual, predicted) -> float:
    """Mean of |actual - predicted| / |actual| * 100 over the series."""
    a, p = _pair(actual, predicted)
    if np.any(a == 0):
        raise ValueError("actual value of 0 makes the percentage undefined")
    return float(np.mean(np.abs(a - p) / np.abs(a)) * 100.0)


def pearson_corr(actual, predicted):
    """Sample correlation coefficient, or None when either side is constant."""
    a, p = _pair(actual, predicted)
    da = a - a.mean()
    dp = p - p.mean()
    var_a = float(da @ da)
    var_p = float(dp @ dp)
    if var_a == 0.0 or var_p == 0.0:
        return None
    return float((da @ dp) / np.sqrt(var_a * var_p))


@dataclass(frozen=True)
class EvalStats:
    """One model's error profile on one phase of one dataset."""

    rmse_scaled: float
    map: float
    mape: float
    corr: object  # float or None

    def as_row(self) -> dict:
        return {
            "rmse_scaled": self.rmse_scaled,
            "map": self.map,
            "mape": self.mape,
            "corr": self.corr,
        }


def evaluate(actual_scaled, predicted_scaled, actual_raw, predicted_raw) -> EvalStats:
    """RMSE on scaled values; percentage and correlation metrics on raw values."""
    return EvalStats(
        rmse_scaled=rmse(actual_scaled, predicted_scaled),
        map=max_abs_percent_error(actual_raw, predicted_raw),
        mape=mean_abs_percent_error(actual_raw, predicted_raw),
        corr=pearson_corr(actual_raw, predicted_raw),
    )
