"""Seasonal ARIMA by exact Gaussian maximum likelihood.

The ARMA likelihood of the differenced series is evaluated with a Kalman
filter in Harvey companion form; the stationary initial covariance comes
from a doubling iteration and the filter freezes its gain once the
covariance recursion reaches steady state. Causality and invertibility are
enforced during fitting by optimizing in partial-autocorrelation space
(tanh of unconstrained reals, mapped through the Levinson-Durbin
recursion), so the simplex never needs explicit constraints: products of
causal factors are causal.

Sign conventions: AR polynomials are 1 - phi_1 B - ..., MA polynomials are
1 + theta_1 B + ...; expanded seasonal products keep those conventions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numba import njit
from scipy.signal import lfilter

from .core import Forecast, MonthStamp, TimeSeries, difference
from .exceptions import DifferentiationError, FitFailedError, InsufficientDataError
from .numerics import OptimizerOptions, nelder_mead, normal_quantile, numerical_hessian

__all__ = [
    "SarimaOrder",
    "SarimaCoeffs",
    "KalmanResult",
    "SarimaFit",
    "expand_polynomials",
    "kalman_loglik",
    "fit_sarima",
    "ndiffs",
    "nsdiffs",
    "auto_sarima",
    "forecast_sarima",
]

PENALTY_LOGLIK = -1e10

KPSS_CRITICAL_5PCT = 0.463
SEASONAL_STRENGTH_THRESHOLD = 0.64

MAX_P = MAX_Q = 5
MAX_SP = MAX_SQ = 2


@dataclass(frozen=True)
class SarimaOrder:
    p: int
    d: int
    q: int
    P: int = 0
    D: int = 0
    Q: int = 0
    m: int = 12

    def __post_init__(self) -> None:
        for name in ("p", "d", "q", "P", "D", "Q"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.m < 1:
            raise ValueError(f"period must be positive, got {self.m}")
        if self.d + self.D > 3:
            raise ValueError(f"d + D must not exceed 3, got {self.d + self.D}")
        if self.m == 1 and (self.P or self.D or self.Q):
            raise ValueError("seasonal orders require period > 1")

    @property
    def n_coeffs(self) -> int:
        return self.p + self.q + self.P + self.Q

    def coeff_names(self) -> list[str]:
        return (
            [f"ar{i}" for i in range(1, self.p + 1)]
            + [f"ma{i}" for i in range(1, self.q + 1)]
            + [f"sar{i}" for i in range(1, self.P + 1)]
            + [f"sma{i}" for i in range(1, self.Q + 1)]
        )

    def label(self) -> str:
        base = f"ARIMA({self.p},{self.d},{self.q})"
        if self.m > 1:
            return f"{base}({self.P},{self.D},{self.Q})[{self.m}]"
        return base


@dataclass(frozen=True)
class SarimaCoeffs:
    ar: tuple[float, ...] = ()
    ma: tuple[float, ...] = ()
    sar: tuple[float, ...] = ()
    sma: tuple[float, ...] = ()

    @classmethod
    def from_flat(cls, order: SarimaOrder, flat: Sequence[float]) -> "SarimaCoeffs":
        flat = tuple(float(v) for v in flat)
        if len(flat) != order.n_coeffs:
            raise ValueError(f"expected {order.n_coeffs} coefficients, got {len(flat)}")
        p, q, P = order.p, order.q, order.P
        return cls(
            ar=flat[:p],
            ma=flat[p : p + q],
            sar=flat[p + q : p + q + P],
            sma=flat[p + q + P :],
        )

    def flat(self) -> np.ndarray:
        return np.array(self.ar + self.ma + self.sar + self.sma, dtype=float)


def _seasonal_poly(coeffs: Sequence[float], m: int, sign: float) -> np.ndarray:
    # 1 + sign * c1 B^m + sign * c2 B^2m + ...
    out = np.zeros(len(coeffs) * m + 1)
    out[0] = 1.0
    for i, c in enumerate(coeffs, start=1):
        out[i * m] = sign * c
    return out


def expand_polynomials(
    order: SarimaOrder, coeffs: SarimaCoeffs
) -> tuple[np.ndarray, np.ndarray]:
    """Multiply plain and seasonal factors into single lag polynomials.

    Returns (phi, theta) where the implied operators are
    1 - phi[0] B - phi[1] B^2 - ...  and  1 + theta[0] B + theta[1] B^2 + ...
    with degrees p + mP and q + mQ.
    """
    if (len(coeffs.ar), len(coeffs.ma), len(coeffs.sar), len(coeffs.sma)) != (
        order.p,
        order.q,
        order.P,
        order.Q,
    ):
        raise ValueError(
            f"coefficient counts {coeffs} do not match order {order.label()}"
        )
    ar_poly = np.concatenate([[1.0], -np.asarray(coeffs.ar, dtype=float)])
    phi_full = np.convolve(ar_poly, _seasonal_poly(coeffs.sar, order.m, -1.0))
    ma_poly = np.concatenate([[1.0], np.asarray(coeffs.ma, dtype=float)])
    theta_full = np.convolve(ma_poly, _seasonal_poly(coeffs.sma, order.m, +1.0))
    return -phi_full[1:], theta_full[1:]


def _is_causal(phi: np.ndarray) -> bool:
    # roots of 1 - phi_1 z - ... - phi_r z^r must lie outside the unit circle
    phi = np.trim_zeros(np.asarray(phi, dtype=float), "b")
    if phi.size == 0:
        return True
    roots = np.roots(np.concatenate([-phi[::-1], [1.0]]))
    return bool(np.all(np.abs(roots) > 1.0))


@njit(cache=True)
def _kalman_core(w, phi, theta):
    """Innovations and their relative variances for a zero-mean ARMA.

    phi has length r, theta length r-1 (already padded). Returns the final
    predicted state as well so forecasting can continue the recursion.
    Status: 0 ok, 1 non-finite prediction variance encountered.
    """
    r = phi.size
    n = w.size
    T = np.zeros((r, r))
    for i in range(r):
        T[i, 0] = phi[i]
    for i in range(r - 1):
        T[i, i + 1] = 1.0
    R = np.empty(r)
    R[0] = 1.0
    for i in range(1, r):
        R[i] = theta[i - 1]
    RRt = R.reshape(r, 1) * R.reshape(1, r)

    # stationary covariance: P = sum_j T^j RR' T'^j by doubling
    P = RRt.copy()
    A = T.copy()
    for _ in range(80):
        Pn = P + A @ P @ A.T
        A = A @ A
        delta = np.abs(Pn - P).max()
        P = Pn
        if delta <= 1e-14 * (1.0 + np.abs(P).max()):
            break

    a = np.zeros(r)
    v = np.empty(n)
    F = np.empty(n)
    K = np.zeros(r)
    Fcur = 0.0
    steady = False
    for t in range(n):
        if not steady:
            Fcur = P[0, 0]
            if not np.isfinite(Fcur) or Fcur <= 0.0:
                return v, F, a, 1
            K = (T @ P[:, 0].copy()) / Fcur
        vt = w[t] - a[0]
        v[t] = vt
        F[t] = Fcur
        a = T @ a + K * vt
        if not steady:
            Pn = T @ P @ T.T + RRt - Fcur * (K.reshape(r, 1) * K.reshape(1, r))
            if np.abs(Pn - P).max() <= 1e-12 * (1.0 + np.abs(Pn).max()):
                steady = True
            P = Pn
    return v, F, a, 0


def _pad(phi: np.ndarray, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r = max(phi.size, theta.size + 1, 1)
    phi_pad = np.zeros(r)
    phi_pad[: phi.size] = phi
    theta_pad = np.zeros(r - 1)
    theta_pad[: theta.size] = theta
    return phi_pad, theta_pad


@dataclass(frozen=True)
class KalmanResult:
    """Concentrated ARMA likelihood evaluation.

    ``causal`` distinguishes the retreat-penalty case (non-causal AR input,
    ``loglik`` = large negative sentinel) from a genuine evaluation.
    ``residuals`` are variance-standardized innovations v_t / sqrt(F_t), in
    data units with constant variance sigma2 across t.
    """

    loglik: float
    sigma2: float
    residuals: np.ndarray
    causal: bool


def kalman_loglik(
    phi: Sequence[float], theta: Sequence[float], w: np.ndarray | TimeSeries
) -> KalmanResult:
    """Exact Gaussian log-likelihood with sigma^2 concentrated out."""
    values = w.values if isinstance(w, TimeSeries) else np.asarray(w, dtype=float)
    if values.ndim != 1 or values.size < 1:
        raise ValueError("w must be a non-empty vector")
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if not _is_causal(phi):
        return KalmanResult(PENALTY_LOGLIK, math.nan, np.empty(0), causal=False)
    return _eval_loglik(phi, theta, values)


def _eval_loglik(phi: np.ndarray, theta: np.ndarray, values: np.ndarray) -> KalmanResult:
    # causality already established by the caller
    phi_pad, theta_pad = _pad(phi, theta)
    v, F, _, status = _kalman_core(values, phi_pad, theta_pad)
    if status != 0:
        raise FitFailedError("Kalman recursion produced a non-positive prediction variance")
    n = values.size
    sigma2 = float(np.mean(v * v / F))
    if sigma2 <= 0.0:
        sigma2 = 1e-300
    loglik = -0.5 * n * (math.log(2.0 * math.pi) + 1.0 + math.log(sigma2)) - 0.5 * float(
        np.sum(np.log(F))
    )
    return KalmanResult(loglik, sigma2, v / np.sqrt(F), causal=True)


def _pacf_to_coeffs(tau: np.ndarray) -> np.ndarray:
    """Levinson-Durbin map from partial autocorrelations to AR coefficients.

    |tau_k| < 1 for all k gives exactly the causal region.
    """
    coeffs = np.zeros(0)
    for k, t in enumerate(tau):
        new = np.empty(k + 1)
        new[:k] = coeffs - t * coeffs[::-1]
        new[k] = t
        coeffs = new
    return coeffs


def _unconstrained_to_coeffs(order: SarimaOrder, u: np.ndarray) -> SarimaCoeffs:
    p, q, P, Q = order.p, order.q, order.P, order.Q
    blocks = np.split(np.tanh(u), np.cumsum([p, q, P])) if u.size else [np.empty(0)] * 4
    ar = _pacf_to_coeffs(blocks[0])
    ma = -_pacf_to_coeffs(blocks[1])
    sar = _pacf_to_coeffs(blocks[2])
    sma = -_pacf_to_coeffs(blocks[3])
    return SarimaCoeffs(tuple(ar), tuple(ma), tuple(sar), tuple(sma))


@dataclass(frozen=True)
class SarimaFit:
    """Exact-ML SARIMA fit on a monthly series.

    ``residuals`` are the standardized innovations of the differenced
    series (count n - d - mD), starting at ``resid_start``. ``phi`` and
    ``theta`` cache the expanded polynomials.
    """

    order: SarimaOrder
    series: TimeSeries
    coeffs: SarimaCoeffs
    se: np.ndarray
    sigma2: float
    loglik: float
    aic: float
    aicc: float
    bic: float
    residuals: np.ndarray
    resid_start: MonthStamp
    phi: np.ndarray
    theta: np.ndarray
    converged: bool
    differenced: TimeSeries = field(repr=False)

    @property
    def method_label(self) -> str:
        return self.order.label()

    @property
    def model_df(self) -> int:
        return self.order.n_coeffs

    @property
    def coeff_values(self) -> np.ndarray:
        return self.coeffs.flat()

    @property
    def response_residuals(self) -> np.ndarray:
        return self.residuals


def _apply_differences(ts: TimeSeries, order: SarimaOrder) -> TimeSeries:
    w = ts
    for _ in range(order.d):
        w = difference(w, 1)
    for _ in range(order.D):
        w = difference(w, order.m)
    return w


def fit_sarima(
    ts: TimeSeries,
    order: SarimaOrder,
    compute_se: bool = True,
    options: OptimizerOptions | None = None,
) -> SarimaFit:
    """Maximize the exact likelihood at a fixed order.

    A conditional-sum-of-squares pass supplies start values for the exact
    phase; both run in partial-autocorrelation space so every iterate is
    causal and invertible. Standard errors come from the inverse numerical
    Hessian of the negative log-likelihood in natural coefficient space.
    ``options`` overrides the exact-phase optimizer budget.
    """
    n_w = len(ts) - order.d - order.m * order.D
    if n_w <= order.p + order.q + order.m * (order.P + order.Q) + 1:
        raise InsufficientDataError(
            f"{order.label()} needs more than "
            f"{order.p + order.q + order.m * (order.P + order.Q) + 1 + order.d + order.m * order.D}"
            f" observations, got {len(ts)}"
        )
    w = _apply_differences(ts, order)
    wv = w.values
    k = order.n_coeffs

    def coeffs_at(u: np.ndarray) -> SarimaCoeffs:
        return _unconstrained_to_coeffs(order, u)

    def exact_neg2ll(u: np.ndarray) -> float:
        # the pacf parametrization keeps every iterate causal
        phi, theta = expand_polynomials(order, coeffs_at(u))
        res = _eval_loglik(phi, theta, wv)
        return -2.0 * res.loglik if np.isfinite(res.loglik) else math.inf

    if k > 0:
        def css_obj(u: np.ndarray) -> float:
            phi, theta = expand_polynomials(order, coeffs_at(u))
            e = lfilter(np.concatenate([[1.0], -phi]), np.concatenate([[1.0], theta]), wv)
            sse = float(np.dot(e, e))
            return math.log(sse) if np.isfinite(sse) and sse > 0 else math.inf

        css = nelder_mead(
            css_obj,
            np.zeros(k),
            OptimizerOptions(max_iterations=600, fatol=1e-9, initial_step=0.4),
        )
        exact_options = options or OptimizerOptions(
            max_iterations=3000, fatol=1e-9, initial_step=0.2
        )
        res = nelder_mead(exact_neg2ll, css.x, exact_options)
        u_hat, converged = res.x, res.converged
    else:
        u_hat, converged = np.zeros(0), True

    coeffs = coeffs_at(u_hat)
    phi, theta = expand_polynomials(order, coeffs)
    final = kalman_loglik(phi, theta, wv)

    se = np.full(k, math.nan)
    if compute_se and k > 0:
        def neg_ll_natural(c: np.ndarray) -> float:
            ph, th = expand_polynomials(order, SarimaCoeffs.from_flat(order, c))
            return -kalman_loglik(ph, th, wv).loglik

        try:
            hess = numerical_hessian(neg_ll_natural, coeffs.flat())
            inv = np.linalg.inv(hess)
            diag = np.diag(inv)
            se = np.where(diag > 0, np.sqrt(np.abs(diag)), math.nan)
        except (np.linalg.LinAlgError, DifferentiationError):
            pass

    n_params = k + 1
    aic = -2.0 * final.loglik + 2.0 * n_params
    aicc = aic + 2.0 * n_params * (n_params + 1.0) / (n_w - n_params - 1.0)
    bic = -2.0 * final.loglik + n_params * math.log(n_w)
    return SarimaFit(
        order=order,
        series=ts,
        coeffs=coeffs,
        se=se,
        sigma2=final.sigma2,
        loglik=final.loglik,
        aic=aic,
        aicc=aicc,
        bic=bic,
        residuals=final.residuals,
        resid_start=w.start,
        phi=phi,
        theta=theta,
        converged=converged,
        differenced=w,
    )


def _kpss_level_stat(values: np.ndarray) -> float:
    """KPSS statistic for level stationarity, Bartlett long-run variance."""
    n = values.size
    e = values - values.mean()
    s = np.cumsum(e)
    bandwidth = int(4.0 * (n / 100.0) ** 0.25)
    lrv = float(np.dot(e, e)) / n
    for j in range(1, bandwidth + 1):
        weight = 1.0 - j / (bandwidth + 1.0)
        lrv += 2.0 * weight * float(np.dot(e[:-j], e[j:])) / n
    if lrv <= 0.0:
        return math.inf
    return float(np.dot(s, s)) / (n * n * lrv)


def ndiffs(ts: TimeSeries) -> int:
    """Smallest d in 0..2 whose d-th difference passes the 5% KPSS test."""
    if len(ts) < 3 * ts.period:
        raise InsufficientDataError(
            f"need at least {3 * ts.period} observations, got {len(ts)}"
        )
    current = ts
    for d in range(3):
        if _kpss_level_stat(current.values) <= KPSS_CRITICAL_5PCT:
            return d
        if d < 2:
            current = difference(current, 1)
    return 2


def _seasonal_strength(ts: TimeSeries) -> float:
    """F_s from a classical moving-average decomposition."""
    m = ts.period
    y = ts.values
    n = y.size
    half = m // 2
    if m % 2 == 0:
        kernel = np.full(m + 1, 1.0 / m)
        kernel[0] = kernel[-1] = 0.5 / m
    else:
        kernel = np.full(m, 1.0 / m)
    trend = np.convolve(y, kernel, mode="valid")
    lo = half if m % 2 == 0 else (m - 1) // 2
    detrended = y[lo : lo + trend.size] - trend
    seasonal = np.empty(m)
    for j in range(m):
        members = detrended[(np.arange(detrended.size) + lo) % m == j]
        seasonal[j] = members.mean()
    seasonal -= seasonal.mean()
    seasonal_component = seasonal[(np.arange(detrended.size) + lo) % m]
    remainder = detrended - seasonal_component
    denom = float(np.var(seasonal_component + remainder))
    if denom <= 0.0:
        return 0.0
    return max(0.0, 1.0 - float(np.var(remainder)) / denom)


def nsdiffs(ts: TimeSeries) -> int:
    """1 if the decomposition's seasonal strength exceeds 0.64, else 0."""
    if len(ts) < 3 * ts.period:
        raise InsufficientDataError(
            f"need at least {3 * ts.period} observations, got {len(ts)}"
        )
    if ts.period < 2:
        return 0
    return 1 if _seasonal_strength(ts) > SEASONAL_STRENGTH_THRESHOLD else 0


def auto_sarima(ts: TimeSeries) -> SarimaFit:
    """Stepwise AICc order search after choosing d and D.

    Starts from the four standard seeds and hill-climbs by changing one of
    p, q, P, Q by one unit at a time (p,q <= 5, P,Q <= 2), keeping the best
    AICc at each move. No mean term is ever fitted.
    """
    m = ts.period
    D = nsdiffs(ts) if m > 1 else 0
    deseason = difference(ts, m) if D else ts
    d = ndiffs(deseason)

    cache: dict[tuple[int, int, int, int], float] = {}
    # candidate ranking tolerates a lighter optimizer budget; the winning
    # order is refitted at full precision below
    search_options = OptimizerOptions(max_iterations=900, fatol=1e-7, initial_step=0.2)

    def aicc_of(key: tuple[int, int, int, int]) -> float:
        if key not in cache:
            p, q, P, Q = key
            try:
                fit = fit_sarima(
                    ts,
                    SarimaOrder(p, d, q, P, D, Q, m),
                    compute_se=False,
                    options=search_options,
                )
                cache[key] = fit.aicc
            except (InsufficientDataError, FitFailedError, ValueError):
                cache[key] = math.inf
        return cache[key]

    if m > 1:
        seeds = [(2, 2, 1, 1), (0, 0, 0, 0), (1, 0, 1, 0), (0, 1, 0, 1)]
    else:
        seeds = [(2, 2, 0, 0), (0, 0, 0, 0), (1, 0, 0, 0), (0, 1, 0, 0)]
    best = min(seeds, key=aicc_of)
    if not math.isfinite(aicc_of(best)):
        raise FitFailedError("no starting order could be fitted")

    while True:
        p, q, P, Q = best
        neighbors = []
        for dp in (-1, 1):
            neighbors.append((p + dp, q, P, Q))
            neighbors.append((p, q + dp, P, Q))
            if m > 1:
                neighbors.append((p, q, P + dp, Q))
                neighbors.append((p, q, P, Q + dp))
        neighbors = [
            c
            for c in neighbors
            if 0 <= c[0] <= MAX_P and 0 <= c[1] <= MAX_Q and 0 <= c[2] <= MAX_SP and 0 <= c[3] <= MAX_SQ
        ]
        challenger = min(neighbors, key=aicc_of)
        if aicc_of(challenger) < aicc_of(best):
            best = challenger
        else:
            break

    p, q, P, Q = best
    return fit_sarima(ts, SarimaOrder(p, d, q, P, D, Q, m))


def _integration_poly(order: SarimaOrder) -> np.ndarray:
    poly = np.array([1.0])
    for _ in range(order.d):
        poly = np.convolve(poly, [1.0, -1.0])
    seasonal = np.zeros(order.m + 1)
    seasonal[0], seasonal[-1] = 1.0, -1.0
    for _ in range(order.D):
        poly = np.convolve(poly, seasonal)
    return poly


def _psi_weights(fit: SarimaFit, count: int) -> np.ndarray:
    """MA(inf) weights of the full nonstationary operator by long division."""
    full_ar = np.convolve(np.concatenate([[1.0], -fit.phi]), _integration_poly(fit.order))
    pi = -full_ar[1:]
    theta = fit.theta
    psi = np.zeros(count)
    psi[0] = 1.0
    for j in range(1, count):
        acc = theta[j - 1] if j - 1 < theta.size else 0.0
        upto = min(j, pi.size)
        for i in range(1, upto + 1):
            acc += pi[i - 1] * psi[j - i]
        psi[j] = acc
    return psi


def forecast_sarima(
    fit: SarimaFit,
    h: int,
    levels: Iterable[float] | None = None,
) -> Forecast:
    """Psi-weight forecasts with reintegration through the differences.

    The ARMA recursion is continued from the final Kalman state for the
    differenced series, the point path is rebuilt through the d + D
    difference operators, and variances on the integrated scale are
    sigma^2 * cumulative sums of squared psi weights.
    """
    if h < 1:
        raise ValueError(f"horizon must be at least 1, got {h}")
    lv = sorted(set(levels or (0.80, 0.95)))

    phi_pad, theta_pad = _pad(fit.phi, fit.theta)
    _, _, state, status = _kalman_core(fit.differenced.values, phi_pad, theta_pad)
    if status != 0:
        raise FitFailedError("Kalman recursion failed at the fitted parameters")
    r = phi_pad.size
    T = np.zeros((r, r))
    T[:, 0] = phi_pad
    T[np.arange(r - 1), np.arange(1, r)] = 1.0
    w_fc = np.empty(h)
    for j in range(h):
        w_fc[j] = state[0]
        state = T @ state

    integration = _integration_poly(fit.order)
    history = list(fit.series.values[-(integration.size - 1) :]) if integration.size > 1 else []
    points = np.empty(h)
    for j in range(h):
        acc = w_fc[j]
        for i in range(1, integration.size):
            acc -= integration[i] * history[-i]
        points[j] = acc
        history.append(acc)

    psi = _psi_weights(fit, h)
    variances = fit.sigma2 * np.cumsum(psi**2)
    spread = np.sqrt(variances)
    intervals = {}
    for level in lv:
        z = normal_quantile((1.0 + level) / 2.0)
        intervals[level] = (points - z * spread, points + z * spread)
    return Forecast(
        origin=fit.series.end,
        points=points,
        intervals=intervals,
        method_label=fit.method_label,
        sigma=float(math.sqrt(fit.sigma2)),
    )
