"""Training-set accuracy measures and residual diagnostics.

Accuracy works on response-scale residuals; the Ljung-Box test is meant for
innovation residuals. Both take plain arrays so they stay agnostic about
which model produced them; each fit object carries its own ``model_df``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import acf
from .exceptions import DegenerateSeriesError
from .numerics import chi_squared_sf

__all__ = [
    "AccuracyMeasures",
    "LjungBoxResult",
    "ResidualBundle",
    "accuracy",
    "ljung_box",
    "residual_bundle",
    "DEFAULT_LAGS",
]

DEFAULT_LAGS = 24


@dataclass(frozen=True)
class AccuracyMeasures:
    """The standard seven training-set measures, percent errors in percent.

    ``pct_skipped`` counts observations excluded from MPE/MAPE because the
    actual value was zero.
    """

    me: float
    rmse: float
    mae: float
    mpe: float
    mape: float
    mase: float
    acf1: float
    pct_skipped: int = 0

    def as_dict(self) -> dict[str, float]:
        return {
            "ME": self.me,
            "RMSE": self.rmse,
            "MAE": self.mae,
            "MPE": self.mpe,
            "MAPE": self.mape,
            "MASE": self.mase,
            "ACF1": self.acf1,
        }


@dataclass(frozen=True)
class LjungBoxResult:
    q_star: float
    df: int
    p_value: float
    lags_used: int
    model_df: int

    def __post_init__(self) -> None:
        if self.df != self.lags_used - self.model_df:
            raise ValueError("df must equal lags_used - model_df")


def accuracy(
    residuals: np.ndarray,
    actual: np.ndarray,
    fitted: np.ndarray,
    training: np.ndarray,
    m: int,
) -> AccuracyMeasures:
    """Aggregate error measures over an in-sample window.

    MASE scales MAE by the in-sample seasonal-naive MAE of the training
    series, so a seasonal-naive fit scores exactly 1. Observations with a
    zero actual are skipped in the percent measures and counted.
    """
    e = np.asarray(residuals, dtype=float)
    y = np.asarray(actual, dtype=float)
    f = np.asarray(fitted, dtype=float)
    train = np.asarray(training, dtype=float)
    if not (e.size == y.size == f.size) or e.size == 0:
        raise ValueError("residuals, actual and fitted must be aligned and nonempty")
    if train.size <= m:
        raise ValueError(f"training series must be longer than m={m} for MASE")

    me = float(np.mean(e))
    rmse = float(np.sqrt(np.mean(e * e)))
    mae = float(np.mean(np.abs(e)))

    nonzero = y != 0.0
    skipped = int(np.count_nonzero(~nonzero))
    if skipped == y.size:
        raise DegenerateSeriesError("percent errors undefined: every actual value is zero")
    ratio = e[nonzero] / y[nonzero]
    mpe = 100.0 * float(np.mean(ratio))
    mape = 100.0 * float(np.mean(np.abs(ratio)))

    scale = float(np.mean(np.abs(train[m:] - train[:-m])))
    if scale == 0.0:
        raise DegenerateSeriesError("MASE scale is zero: training series repeats with period m")
    mase = mae / scale

    if mae == 0.0:
        acf1 = 0.0
    else:
        try:
            acf1 = float(acf(e, 1)[0])
        except DegenerateSeriesError:
            acf1 = math.nan
    return AccuracyMeasures(me, rmse, mae, mpe, mape, mase, acf1, skipped)


def ljung_box(residuals: np.ndarray, lags_used: int = DEFAULT_LAGS, model_df: int = 0) -> LjungBoxResult:
    """Portmanteau test Q* = n(n+2) sum r_k^2 / (n-k), df = lags - model_df."""
    e = np.asarray(residuals, dtype=float)
    n = e.size
    if lags_used <= model_df:
        raise ValueError(f"lags_used={lags_used} must exceed model_df={model_df}")
    if n <= lags_used:
        raise ValueError(f"need more than {lags_used} residuals, got {n}")
    r = acf(e, lags_used)
    k = np.arange(1, lags_used + 1)
    q_star = float(n * (n + 2.0) * np.sum(r * r / (n - k)))
    df = lags_used - model_df
    return LjungBoxResult(q_star, df, chi_squared_sf(q_star, df), lags_used, model_df)


@dataclass(frozen=True)
class ResidualBundle:
    """Structured data behind a residual-check figure; nothing is rendered.

    ``acf_values`` run from lag 1 to ``lags``; bars outside ±``band`` are
    the ones a plot would flag.
    """

    residuals: np.ndarray
    lags: int
    acf_values: np.ndarray
    band: float
    bin_edges: np.ndarray
    bin_counts: np.ndarray


def residual_bundle(residuals: np.ndarray) -> ResidualBundle:
    e = np.asarray(residuals, dtype=float)
    n = e.size
    if n == 0:
        raise ValueError("residuals must be nonempty")
    lags = max(1, min(DEFAULT_LAGS, n // 4))
    values = acf(e, lags)
    band = 2.0 / math.sqrt(n)
    bins = int(math.ceil(math.log2(n))) + 1 if n > 1 else 1
    counts, edges = np.histogram(e, bins=bins)
    return ResidualBundle(e, lags, values, band, edges, counts)
