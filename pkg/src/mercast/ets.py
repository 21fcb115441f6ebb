"""Exponential-smoothing state-space models without trend.

Supported forms are {A,M} error x {N,A} seasonality. The innovation filter,
likelihood conventions and automatic selection live here; the filter inner
loop is jit-compiled because fitting evaluates it thousands of times.

Conventions: -2 loglik = n(1 + ln 2pi + ln(SSE/n)) for additive error, with
2*sum(ln|mu_t|) added under multiplicative error (residuals there are
relative, eps_t = (y_t - mu_t)/mu_t). Reported sigma uses denominator
n - model_df where model_df = k - 1 excludes sigma itself. AIC = -2 loglik
+ 2k with k counting smoothing parameters, initial states and sigma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from numba import njit

from .core import Forecast, TimeSeries
from .exceptions import FitFailedError, InsufficientDataError, SingularForecastError
from .numerics import OptimizerOptions, nelder_mead, normal_quantile

__all__ = [
    "EtsSpec",
    "EtsFilterResult",
    "EtsFit",
    "ets_filter",
    "fit_ets",
    "auto_ets",
    "forecast_ets",
]

MC_PATHS = 5000

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class EtsSpec:
    """Model form in the (Error, Trend, Seasonal) taxonomy."""

    error: str
    seasonal: str
    period: int = 12
    trend: str = "N"

    def __post_init__(self) -> None:
        if self.error not in ("A", "M"):
            raise ValueError(f"error must be 'A' or 'M', got {self.error!r}")
        if self.trend != "N":
            raise ValueError("trend components are not supported")
        if self.seasonal not in ("N", "A"):
            raise ValueError(f"seasonal must be 'N' or 'A', got {self.seasonal!r}")
        if self.seasonal == "A" and self.period < 2:
            raise ValueError("additive seasonality needs period >= 2")

    @property
    def is_seasonal(self) -> bool:
        return self.seasonal == "A"

    @property
    def n_params(self) -> int:
        """k for the information criteria: smoothing + states + sigma."""
        smoothing = 2 if self.is_seasonal else 1
        states = 1 + (self.period - 1 if self.is_seasonal else 0)
        return smoothing + states + 1

    def label(self) -> str:
        return f"ETS({self.error},{self.trend},{self.seasonal})"


@njit(cache=True)
def _filter_kernel(y, m, alpha, gamma, level0, buf0, multiplicative):
    # buf is indexed by observation position mod m; buf0 must already be in
    # chronological order (entry j serves observations congruent to j)
    n = y.size
    buf = buf0.copy()
    level = level0
    fitted = np.empty(n)
    resid = np.empty(n)
    log_mu = 0.0
    sse = 0.0
    ok = True
    for t in range(n):
        mu = level + buf[t % m]
        fitted[t] = mu
        if multiplicative:
            if mu == 0.0:
                ok = False
                break
            e = (y[t] - mu) / mu
            correction = y[t] - mu
            log_mu += np.log(np.abs(mu))
        else:
            e = y[t] - mu
            correction = e
        resid[t] = e
        sse += e * e
        level += alpha * correction
        buf[t % m] += gamma * correction
    return fitted, resid, level, buf, sse, log_mu, ok


@dataclass(frozen=True)
class EtsFilterResult:
    """One pass of the innovation filter at fixed parameters.

    ``residuals`` are innovations: level errors for additive, relative
    errors for multiplicative. ``final_seasonal`` is the rolling buffer,
    indexed by observation position modulo the period.
    """

    fitted: np.ndarray
    residuals: np.ndarray
    final_level: float
    final_seasonal: np.ndarray
    sse: float
    loglik: float


def _loglik(n: int, sse: float, log_mu: float) -> float:
    if sse <= 0.0:
        return math.inf
    return -0.5 * n * (1.0 + _LOG_2PI + math.log(sse / n)) - log_mu


def ets_filter(
    spec: EtsSpec,
    ts: TimeSeries,
    alpha: float,
    gamma: float = 0.0,
    level: float = 0.0,
    seasonal: Iterable[float] = (),
) -> EtsFilterResult:
    """Run the state recursion at fixed parameters and score it.

    ``seasonal`` lists the initial states most recent first (s_0 down to
    s_{-(m-1)}), the order they are reported in.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0,1], got {alpha}")
    if not 0.0 <= gamma <= 1.0 - alpha:
        raise ValueError(f"gamma must lie in [0, 1-alpha], got {gamma}")
    s = np.asarray(list(seasonal), dtype=float)
    if spec.is_seasonal:
        if s.size != spec.period:
            raise ValueError(f"need {spec.period} seasonal states, got {s.size}")
        buf0 = s[::-1].copy()
        m = spec.period
    else:
        if s.size:
            raise ValueError("non-seasonal spec takes no seasonal states")
        if gamma != 0.0:
            raise ValueError("non-seasonal spec requires gamma = 0")
        buf0 = np.zeros(1)
        m = 1
    fitted, resid, lvl, buf, sse, log_mu, ok = _filter_kernel(
        ts.values, m, float(alpha), float(gamma), float(level), buf0, spec.error == "M"
    )
    if not ok:
        raise SingularForecastError("one-step forecast hit zero under multiplicative error")
    return EtsFilterResult(
        fitted=fitted,
        residuals=resid,
        final_level=float(lvl),
        final_seasonal=buf if spec.is_seasonal else np.empty(0),
        sse=float(sse),
        loglik=_loglik(len(ts), float(sse), float(log_mu)),
    )


@dataclass(frozen=True)
class EtsFit:
    """Maximum-likelihood fit of one ETS form.

    ``initial_seasonal`` is reported most recent first and sums to zero.
    ``residuals`` are innovations (relative under multiplicative error);
    ``fitted`` is always in level units, so response residuals are
    ``series.values - fitted`` for either error type.
    """

    spec: EtsSpec
    series: TimeSeries
    alpha: float
    gamma: float
    initial_level: float
    initial_seasonal: np.ndarray
    sigma: float
    loglik: float
    aic: float
    aicc: float
    bic: float
    fitted: np.ndarray
    residuals: np.ndarray
    final_level: float
    final_seasonal: np.ndarray
    converged: bool

    @property
    def method_label(self) -> str:
        return self.spec.label()

    @property
    def model_df(self) -> int:
        """Parameters counted against residual df: everything but sigma."""
        return self.spec.n_params - 1

    @property
    def response_residuals(self) -> np.ndarray:
        return self.series.values - self.fitted


def _heuristic_start(ts: TimeSeries, spec: EtsSpec) -> tuple[float, np.ndarray]:
    m = spec.period
    y = ts.values
    level = float(y[: 2 * m].mean()) if len(ts) >= 2 * m else float(y.mean())
    if not spec.is_seasonal:
        return level, np.empty(0)
    head = y[: min(len(ts), 3 * m)]
    pattern = np.empty(m)
    for j in range(m):
        pattern[j] = head[j::m].mean() - head.mean()
    pattern -= pattern.mean()
    return level, pattern


def _admissible(vec: np.ndarray, seasonal: bool) -> tuple[float, float]:
    alpha = 1.0 / (1.0 + math.exp(-vec[0]))
    gamma = (1.0 - alpha) / (1.0 + math.exp(-vec[1])) if seasonal else 0.0
    return alpha, gamma


def fit_ets(ts: TimeSeries, spec: EtsSpec) -> EtsFit:
    """Jointly fit smoothing parameters and initial states by MLE.

    Alpha and gamma are optimized through logistic transforms that keep
    0 < alpha < 1 and 0 < gamma < 1 - alpha; initial states are free.
    """
    n = len(ts)
    m = spec.period
    k = spec.n_params
    needed = max(2 * m + 3, k + 2) if spec.is_seasonal else k + 2
    if n < needed:
        raise InsufficientDataError(f"{spec.label()} needs at least {needed} points, got {n}")

    y = ts.values
    level0, pattern = _heuristic_start(ts, spec)
    multiplicative = spec.error == "M"
    buf_template = np.zeros(1)

    def unpack(vec: np.ndarray) -> tuple[float, float, float, np.ndarray]:
        alpha, gamma = _admissible(vec, spec.is_seasonal)
        if spec.is_seasonal:
            level = vec[2]
            free = vec[3:]
            buf = np.empty(m)
            buf[:-1] = free
            buf[-1] = -free.sum()
        else:
            level = vec[1]
            buf = buf_template
        return alpha, gamma, level, buf

    def objective(vec: np.ndarray) -> float:
        alpha, gamma, level, buf = unpack(vec)
        _, _, _, _, sse, log_mu, ok = _filter_kernel(
            y, m if spec.is_seasonal else 1, alpha, gamma, level, buf, multiplicative
        )
        if not ok or not np.isfinite(sse) or sse <= 0.0:
            return math.inf
        return -2.0 * _loglik(n, sse, log_mu)

    a0 = math.log(0.3 / 0.7)
    if spec.is_seasonal:
        g0 = math.log((0.1 / 0.7) / (1.0 - 0.1 / 0.7))
        start = np.concatenate([[a0, g0, level0], pattern[:-1]])
    else:
        start = np.array([a0, level0])

    scale = max(float(np.std(y)), 1e-3)
    steps = np.full(start.size, 0.5)
    steps[2 if spec.is_seasonal else 1 :] = 0.1 * scale
    opts = OptimizerOptions(max_iterations=5000, fatol=1e-8, initial_step=steps)

    f_start = objective(start)
    if not np.isfinite(f_start):
        raise FitFailedError(f"{spec.label()}: heuristic start is not evaluable on this series")
    res = nelder_mead(objective, start, opts)
    if not res.fun < f_start:
        raise FitFailedError(
            f"{spec.label()}: optimizer failed to improve on the heuristic start "
            f"(f={res.fun:.6g} after {res.iterations} iterations)"
        )

    alpha, gamma, level, buf = unpack(res.x)
    flt = ets_filter(
        spec,
        ts,
        alpha,
        gamma,
        level,
        seasonal=buf[::-1] if spec.is_seasonal else (),
    )
    if flt.sse <= 0.0:
        raise FitFailedError(f"{spec.label()}: degenerate fit with zero residual variance")
    sigma2 = flt.sse / (n - (k - 1))
    loglik = flt.loglik
    aic = -2.0 * loglik + 2.0 * k
    aicc = aic + 2.0 * k * (k + 1.0) / (n - k - 1.0)
    bic = -2.0 * loglik + k * math.log(n)
    return EtsFit(
        spec=spec,
        series=ts,
        alpha=alpha,
        gamma=gamma,
        initial_level=level,
        initial_seasonal=buf[::-1].copy() if spec.is_seasonal else np.empty(0),
        sigma=float(math.sqrt(sigma2)),
        loglik=loglik,
        aic=aic,
        aicc=aicc,
        bic=bic,
        fitted=flt.fitted,
        residuals=flt.residuals,
        final_level=flt.final_level,
        final_seasonal=flt.final_seasonal,
        converged=res.converged,
    )


def auto_ets(ts: TimeSeries) -> EtsFit:
    """Fit every supported form and keep the lowest-AICc one.

    Multiplicative-error forms are only tried on strictly positive series.
    Ties prefer additive error, then no seasonality.
    """
    candidates = [
        EtsSpec("A", "N", ts.period),
        EtsSpec("A", "A", ts.period),
        EtsSpec("M", "N", ts.period),
        EtsSpec("M", "A", ts.period),
    ]
    positive = bool(np.all(ts.values > 0.0))
    best: EtsFit | None = None
    failures: list[str] = []
    for spec in candidates:
        if spec.error == "M" and not positive:
            failures.append(f"{spec.label()}: skipped, series not strictly positive")
            continue
        try:
            fit = fit_ets(ts, spec)
        except (FitFailedError, InsufficientDataError, SingularForecastError) as exc:
            failures.append(str(exc))
            continue
        if best is None or fit.aicc < best.aicc:
            best = fit
    if best is None:
        raise FitFailedError("no ETS candidate could be fitted: " + "; ".join(failures))
    return best


def _simulate_multiplicative(
    fit: EtsFit, h: int, rng: np.random.Generator, paths: int
) -> np.ndarray:
    m = fit.spec.period if fit.spec.is_seasonal else 1
    n = len(fit.series)
    level = np.full(paths, fit.final_level)
    buf = (
        np.repeat(fit.final_seasonal[None, :], paths, axis=0)
        if fit.spec.is_seasonal
        else np.zeros((paths, 1))
    )
    eps = rng.normal(0.0, fit.sigma, size=(paths, h))
    out = np.empty((paths, h))
    for step in range(h):
        idx = (n + step) % m
        mu = level + buf[:, idx]
        correction = mu * eps[:, step]
        out[:, step] = mu + correction
        level = level + fit.alpha * correction
        buf[:, idx] = buf[:, idx] + fit.gamma * correction
    return out


def forecast_ets(
    fit: EtsFit,
    h: int,
    levels: Iterable[float] | None = None,
    seed: int = 0,
) -> Forecast:
    """Flat-level forecast with the final seasonal pattern repeated.

    Additive-error variances are the closed form
    sigma^2 [1 + alpha^2 (h-1) + gamma(2 alpha + gamma) floor((h-1)/m)];
    multiplicative-error intervals come from seeded Monte Carlo over the
    state recursion (5000 paths, empirical quantiles).
    """
    if h < 1:
        raise ValueError(f"horizon must be at least 1, got {h}")
    lv = sorted(set(levels or (0.80, 0.95)))

    m = fit.spec.period if fit.spec.is_seasonal else 1
    n = len(fit.series)
    steps = np.arange(1, h + 1)
    if fit.spec.is_seasonal:
        points = fit.final_level + fit.final_seasonal[(n + steps - 1) % m]
    else:
        points = np.full(h, fit.final_level)

    intervals: dict[float, tuple[np.ndarray, np.ndarray]] = {}
    if fit.spec.error == "A":
        cycles = (steps - 1) // fit.spec.period
        var = fit.sigma**2 * (
            1.0
            + fit.alpha**2 * (steps - 1)
            + fit.gamma * (2.0 * fit.alpha + fit.gamma) * cycles
        )
        spread = np.sqrt(var)
        for level in lv:
            z = normal_quantile((1.0 + level) / 2.0)
            intervals[level] = (points - z * spread, points + z * spread)
    else:
        rng = np.random.default_rng(seed)
        sims = _simulate_multiplicative(fit, h, rng, MC_PATHS)
        for level in lv:
            tail = (1.0 - level) / 2.0
            lo = np.quantile(sims, tail, axis=0)
            hi = np.quantile(sims, 1.0 - tail, axis=0)
            intervals[level] = (np.minimum(lo, points), np.maximum(hi, points))
    return Forecast(
        origin=fit.series.end,
        points=points.astype(float),
        intervals=intervals,
        method_label=fit.method_label,
        sigma=fit.sigma,
    )
