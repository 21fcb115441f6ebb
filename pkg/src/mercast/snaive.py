"""Seasonal naive model.

Each month is predicted by the same calendar month one year earlier, so the
fit is nothing but lagged values; all the information content sits in the
residual standard deviation that scales the intervals.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import Forecast, MonthStamp, TimeSeries
from .exceptions import InsufficientDataError
from .numerics import normal_quantile

__all__ = ["SNaiveFit", "fit_snaive", "forecast_snaive"]

DEFAULT_LEVELS = (0.80, 0.95)

METHOD_LABEL = "Seasonal naive method"


@dataclass(frozen=True)
class SNaiveFit:
    """Fitted seasonal naive model.

    ``fitted`` and ``residuals`` cover the months from index ``period``
    onward (the first year has no one-year-back predecessor), so both have
    length n - period.
    """

    series: TimeSeries
    fitted: np.ndarray
    residuals: np.ndarray
    residual_sd: float
    period: int

    @property
    def fitted_start(self) -> MonthStamp:
        return self.series.start + self.period

    @property
    def method_label(self) -> str:
        return METHOD_LABEL

    @property
    def model_df(self) -> int:
        # nothing is estimated
        return 0


def fit_snaive(ts: TimeSeries) -> SNaiveFit:
    """Fit y_t = y_{t-m} + e_t and estimate sd(e) over the n-m residuals."""
    m = ts.period
    n = len(ts)
    if n < 2 * m:
        raise InsufficientDataError(
            f"seasonal naive needs at least two full periods ({2 * m}), got {n}"
        )
    fitted = ts.values[:-m].copy()
    residuals = ts.values[m:] - fitted
    sd = float(np.std(residuals, ddof=1))
    return SNaiveFit(series=ts, fitted=fitted, residuals=residuals, residual_sd=sd, period=m)


def forecast_snaive(
    fit: SNaiveFit,
    h: int,
    levels: Iterable[float] | None = None,
) -> Forecast:
    """Repeat the last observed year for ``h`` months ahead.

    The interval half-width at level L is z_{(1+L)/2} * sd * sqrt(k+1)
    where k counts completed forecast years before step h; uncertainty
    accumulates year over year because each repeated year compounds an
    independent seasonal-difference error.
    """
    if h < 1:
        raise ValueError(f"horizon must be at least 1, got {h}")
    lv = sorted(set(levels or DEFAULT_LEVELS))

    m = fit.period
    y = fit.series.values
    steps = np.arange(1, h + 1)
    k = (steps - 1) // m
    points = y[y.size + steps - 1 - m * (k + 1)]
    spread = fit.residual_sd * np.sqrt(k + 1.0)
    intervals = {}
    for level in lv:
        z = normal_quantile((1.0 + level) / 2.0)
        intervals[level] = (points - z * spread, points + z * spread)
    return Forecast(
        origin=fit.series.end,
        points=points.astype(float),
        intervals=intervals,
        method_label=METHOD_LABEL,
        sigma=fit.residual_sd,
    )
