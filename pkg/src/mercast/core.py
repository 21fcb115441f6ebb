"""Monthly time-series container and basic transforms.

Everything here is immutable after construction and purely functional:
series can be shared freely between threads and model fits.
"""

from __future__ import annotations

import calendar
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .exceptions import DegenerateSeriesError

__all__ = [
    "MonthStamp",
    "TimeSeries",
    "Forecast",
    "SeasonalSubseries",
    "difference",
    "undifference",
    "acf",
    "seasonal_subseries",
]


@dataclass(frozen=True, order=True)
class MonthStamp:
    """A calendar month, totally ordered by (year, month)."""

    year: int
    month: int

    def __post_init__(self) -> None:
        if not 1 <= self.month <= 12:
            raise ValueError(f"month must be in 1..12, got {self.month}")

    def plus(self, months: int) -> "MonthStamp":
        total = self.year * 12 + (self.month - 1) + months
        return MonthStamp(total // 12, total % 12 + 1)

    def __add__(self, months: int) -> "MonthStamp":
        return self.plus(months)

    def months_since(self, other: "MonthStamp") -> int:
        """Signed number of months from ``other`` to ``self``."""
        return (self.year - other.year) * 12 + (self.month - other.month)

    def label(self) -> str:
        """Human label like ``Apr 2022``."""
        return f"{calendar.month_abbr[self.month]} {self.year}"

    def isoformat(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"

    def yyyymm(self) -> int:
        return self.year * 100 + self.month

    @classmethod
    def from_yyyymm(cls, value: int) -> "MonthStamp":
        return cls(value // 100, value % 100)

    @classmethod
    def parse(cls, text: str) -> "MonthStamp":
        """Parse ``YYYY-MM`` (also accepts a bare YYYYMM integer string)."""
        text = text.strip()
        if "-" in text:
            y, m = text.split("-", 1)
            return cls(int(y), int(m))
        if len(text) == 6 and text.isdigit():
            return cls.from_yyyymm(int(text))
        raise ValueError(f"cannot parse month stamp {text!r}, expected YYYY-MM")


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Contiguous monthly series of finite reals anchored at ``start``.

    Missing values are rejected outright: every slot between ``start`` and
    ``end`` holds a finite observation. ``period`` is carried for seasonal
    models and is 12 for all supported data.
    """

    start: MonthStamp
    values: np.ndarray
    period: int = 12
    unit: str = ""
    name: str = ""

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1:
            raise ValueError(f"values must be one-dimensional, got shape {arr.shape}")
        if arr.size < 1:
            raise ValueError("series needs at least one observation")
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise ValueError(f"non-finite value at position {bad} ({(self.start + bad).label()})")
        if self.period < 1:
            raise ValueError(f"period must be positive, got {self.period}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.start == other.start
            and self.period == other.period
            and np.array_equal(self.values, other.values)
        )

    @property
    def end(self) -> MonthStamp:
        return self.start + (len(self) - 1)

    def month_at(self, index: int) -> MonthStamp:
        if not 0 <= index < len(self):
            raise IndexError(index)
        return self.start + index

    def index_of(self, stamp: MonthStamp) -> int:
        offset = stamp.months_since(self.start)
        if not 0 <= offset < len(self):
            raise ValueError(
                f"{stamp.label()} outside series span "
                f"{self.start.label()}..{self.end.label()}"
            )
        return offset

    def slice(self, start: MonthStamp, end: MonthStamp) -> "TimeSeries":
        """Inclusive sub-series between two stamps inside the span."""
        if end < start:
            raise ValueError(f"empty range {start.label()}..{end.label()}")
        i, j = self.index_of(start), self.index_of(end)
        return TimeSeries(start, self.values[i : j + 1], self.period, self.unit, self.name)

    def with_values(self, values: np.ndarray, start: MonthStamp | None = None) -> "TimeSeries":
        return TimeSeries(start or self.start, values, self.period, self.unit, self.name)


def difference(ts: TimeSeries, lag: int = 1) -> TimeSeries:
    """Lag-``lag`` difference: result[t] = ts[t+lag] - ts[t].

    The result starts ``lag`` months after ``ts`` and is ``lag`` shorter.
    """
    if lag < 1:
        raise ValueError(f"lag must be positive, got {lag}")
    if lag >= len(ts):
        raise ValueError(f"lag {lag} must be smaller than series length {len(ts)}")
    values = ts.values[lag:] - ts.values[:-lag]
    return ts.with_values(values, ts.start + lag)


def undifference(diffed: TimeSeries, anchor: Iterable[float]) -> TimeSeries:
    """Invert :func:`difference` given the ``lag`` values preceding it.

    ``anchor`` holds the original observations for the ``lag`` months
    immediately before ``diffed.start``; the reconstruction satisfies
    ``undifference(difference(ts, lag), ts.values[:lag]) == ts``.
    """
    anchor_arr = np.asarray(list(anchor), dtype=float)
    lag = anchor_arr.size
    if lag < 1:
        raise ValueError("anchor must supply at least one preceding value")
    out = np.empty(lag + len(diffed))
    out[:lag] = anchor_arr
    for t in range(len(diffed)):
        out[lag + t] = out[t] + diffed.values[t]
    return diffed.with_values(out, diffed.start + (-lag))


def acf(values: np.ndarray, max_lag: int) -> np.ndarray:
    """Sample autocorrelations r_1..r_max_lag with divide-by-n normalization.

    r_k = sum_{t}(y_t - mean)(y_{t+k} - mean) / sum_t (y_t - mean)^2, which
    keeps every r_k in [-1, 1] and matches the usual sample ACF (lag 0
    normalizes to one and is not returned).
    """
    y = np.asarray(values, dtype=float)
    if y.ndim != 1:
        raise ValueError("values must be one-dimensional")
    if max_lag < 1:
        raise ValueError(f"max_lag must be positive, got {max_lag}")
    if y.size < max_lag + 1:
        raise ValueError(f"need at least {max_lag + 1} observations for lag {max_lag}")
    centered = y - y.mean()
    denom = float(np.dot(centered, centered))
    if denom == 0.0:
        raise DegenerateSeriesError("series has zero variance")
    return np.array(
        [float(np.dot(centered[:-k], centered[k:])) / denom for k in range(1, max_lag + 1)]
    )


@dataclass(frozen=True)
class SeasonalSubseries:
    """Observations regrouped by calendar month, plus per-month means."""

    by_month: Mapping[int, np.ndarray]
    means: Mapping[int, float]

    def month_label(self, month: int) -> str:
        return calendar.month_abbr[month]


def seasonal_subseries(ts: TimeSeries) -> SeasonalSubseries:
    """Split a monthly series into the 12 calendar-month subseries.

    Subseries k lists every observation falling in calendar month k in time
    order; together they partition the original series exactly.
    """
    if len(ts) < ts.period:
        raise ValueError(
            f"need at least one full period ({ts.period}) of data, got {len(ts)}"
        )
    groups: dict[int, list[float]] = {m: [] for m in range(1, 13)}
    for i, v in enumerate(ts.values):
        groups[ts.month_at(i).month].append(float(v))
    by_month = {m: np.array(vs) for m, vs in groups.items()}
    means = {m: float(vs.mean()) if vs.size else float("nan") for m, vs in by_month.items()}
    return SeasonalSubseries(by_month=by_month, means=means)


_BAND_RTOL = 1e-9


@dataclass(frozen=True)
class Forecast:
    """Point forecasts with per-level prediction intervals.

    ``origin`` is the last observed month; horizon step h refers to
    ``origin + h``. Intervals map a confidence level (e.g. 0.95) to a
    (lower, upper) pair of arrays. Bands always bracket the points and
    nest across levels.
    """

    origin: MonthStamp
    points: np.ndarray
    intervals: Mapping[float, tuple[np.ndarray, np.ndarray]]
    method_label: str
    sigma: float = field(default=float("nan"))

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 1:
            raise ValueError("points must be a non-empty vector")
        object.__setattr__(self, "points", pts)
        fixed: dict[float, tuple[np.ndarray, np.ndarray]] = {}
        for level, (lo, hi) in self.intervals.items():
            if not 0.0 < level < 1.0:
                raise ValueError(f"confidence level must be in (0,1), got {level}")
            lo = np.asarray(lo, dtype=float)
            hi = np.asarray(hi, dtype=float)
            if lo.shape != pts.shape or hi.shape != pts.shape:
                raise ValueError("interval bounds must match the horizon")
            fixed[float(level)] = (lo, hi)
        object.__setattr__(self, "intervals", fixed)
        scale = np.maximum(1.0, np.abs(pts))
        for level, (lo, hi) in fixed.items():
            if np.any(lo > pts + _BAND_RTOL * scale) or np.any(hi < pts - _BAND_RTOL * scale):
                raise ValueError(f"{level:.0%} band does not bracket the point forecasts")
        levels = sorted(fixed)
        for narrow, wide in zip(levels, levels[1:]):
            lo_n, hi_n = fixed[narrow]
            lo_w, hi_w = fixed[wide]
            if np.any(lo_w > lo_n + _BAND_RTOL * scale) or np.any(hi_w < hi_n - _BAND_RTOL * scale):
                raise ValueError(f"{wide:.0%} band does not contain the {narrow:.0%} band")

    @property
    def horizon(self) -> int:
        return int(self.points.size)

    @property
    def levels(self) -> list[float]:
        return sorted(self.intervals)

    def month(self, h: int) -> MonthStamp:
        if not 1 <= h <= self.horizon:
            raise IndexError(h)
        return self.origin + h

    def months(self) -> list[MonthStamp]:
        return [self.origin + h for h in range(1, self.horizon + 1)]
