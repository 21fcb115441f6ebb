"""Shared numerical machinery for the model fitters.

Distribution functions ride on ``scipy.special`` (the survival function is
the regularized upper incomplete gamma, evaluated with the usual
series/continued-fraction split). The simplex optimizer is implemented here
so its restart policy, iteration accounting and function-tolerance-only
convergence match what the likelihood surfaces need.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .exceptions import DifferentiationError

__all__ = [
    "OptimizerOptions",
    "OptimizerResult",
    "normal_quantile",
    "chi_squared_sf",
    "nelder_mead",
    "numerical_hessian",
]


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF: the z with Phi(z) = p."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie strictly inside (0,1), got {p}")
    return float(special.ndtri(p))


def chi_squared_sf(x: float, df: int) -> float:
    """Upper-tail probability P(X >= x) for a chi-squared variable.

    Accurate far into the tail (p-values below 1e-300 are representable),
    which matters for portmanteau statistics on long series.
    """
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    if df < 1:
        raise ValueError(f"df must be a positive integer, got {df}")
    return float(special.gammaincc(df / 2.0, x / 2.0))


@dataclass(frozen=True)
class OptimizerOptions:
    """Simplex search controls.

    ``initial_step`` sets the per-coordinate offsets of the starting
    simplex; a scalar applies to every coordinate.
    """

    max_iterations: int = 2000
    fatol: float = 1e-13
    initial_step: float | Sequence[float] = 0.1

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not self.fatol > 0:
            raise ValueError("fatol must be positive")

    def steps(self, dim: int) -> np.ndarray:
        steps = np.broadcast_to(np.asarray(self.initial_step, dtype=float), (dim,)).copy()
        if np.any(steps == 0) or not np.all(np.isfinite(steps)):
            raise ValueError("initial_step entries must be finite and nonzero")
        return steps


@dataclass(frozen=True)
class OptimizerResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool


def _simplex_loop(
    objective: Callable[[np.ndarray], float],
    x0: np.ndarray,
    steps: np.ndarray,
    max_iterations: int,
    fatol: float,
) -> tuple[np.ndarray, float, int, bool]:
    # Classic Nelder-Mead with reflection 1, expansion 2, contraction 0.5,
    # shrink 0.5. Non-finite objective values are treated as +inf so
    # penalty regions are simply retreated from.
    def f(x: np.ndarray) -> float:
        v = float(objective(x))
        return v if np.isfinite(v) else np.inf

    dim = x0.size
    sim = np.repeat(x0[None, :], dim + 1, axis=0)
    for i in range(dim):
        sim[i + 1, i] += steps[i]
    fsim = np.array([f(s) for s in sim])

    iterations = 0
    converged = False
    while iterations < max_iterations:
        order = np.argsort(fsim, kind="stable")
        sim, fsim = sim[order], fsim[order]
        if np.isfinite(fsim[0]) and fsim[-1] - fsim[0] <= fatol:
            converged = True
            break
        iterations += 1

        centroid = sim[:-1].mean(axis=0)
        reflected = centroid + (centroid - sim[-1])
        f_r = f(reflected)
        if f_r < fsim[0]:
            expanded = centroid + 2.0 * (centroid - sim[-1])
            f_e = f(expanded)
            if f_e < f_r:
                sim[-1], fsim[-1] = expanded, f_e
            else:
                sim[-1], fsim[-1] = reflected, f_r
        elif f_r < fsim[-2]:
            sim[-1], fsim[-1] = reflected, f_r
        else:
            if f_r < fsim[-1]:
                contracted = centroid + 0.5 * (reflected - centroid)
            else:
                contracted = centroid + 0.5 * (sim[-1] - centroid)
            f_c = f(contracted)
            if f_c < min(f_r, fsim[-1]):
                sim[-1], fsim[-1] = contracted, f_c
            else:
                sim[1:] = sim[0] + 0.5 * (sim[1:] - sim[0])
                fsim[1:] = [f(s) for s in sim[1:]]

    best = int(np.argmin(fsim))
    return sim[best].copy(), float(fsim[best]), iterations, converged


def nelder_mead(
    objective: Callable[[np.ndarray], float],
    x0: Sequence[float],
    options: OptimizerOptions | None = None,
) -> OptimizerResult:
    """Derivative-free minimization with one automatic restart.

    After the first simplex converges (or exhausts its budget) the search
    restarts from the incumbent with a 10x smaller simplex; likelihood
    surfaces around these models are ridge-prone and the restart reliably
    shakes the simplex off a collapsed face. Exhausting the budget is
    reported via ``converged=False``, never as an exception.
    """
    opts = options or OptimizerOptions()
    start = np.asarray(x0, dtype=float)
    if start.ndim != 1 or start.size == 0:
        raise ValueError("x0 must be a non-empty vector")
    f0 = float(objective(start))
    if not np.isfinite(f0):
        raise ValueError("objective is not finite at the starting point")

    steps = opts.steps(start.size)
    x1, f1, it1, _ = _simplex_loop(objective, start, steps, opts.max_iterations, opts.fatol)
    x2, f2, it2, conv = _simplex_loop(objective, x1, steps * 0.1, opts.max_iterations, opts.fatol)

    if f2 <= f1:
        best_x, best_f = x2, f2
    else:
        best_x, best_f = x1, f1
    if f0 < best_f:
        best_x, best_f = start, f0
    return OptimizerResult(x=best_x, fun=best_f, iterations=it1 + it2, converged=conv)


def numerical_hessian(
    objective: Callable[[np.ndarray], float],
    x: Sequence[float],
) -> np.ndarray:
    """Central-difference Hessian, symmetrized.

    Step sizes follow h_i = max(|x_i|, 1) * eps^(1/3), the standard
    truncation/rounding balance for second differences.
    """
    x0 = np.asarray(x, dtype=float)
    if x0.ndim != 1 or x0.size == 0:
        raise ValueError("x must be a non-empty vector")
    h = np.maximum(np.abs(x0), 1.0) * float(np.finfo(float).eps) ** (1.0 / 3.0)

    def f(point: np.ndarray) -> float:
        v = float(objective(point))
        if not np.isfinite(v):
            raise DifferentiationError(f"objective not finite at {point}")
        return v

    n = x0.size
    hess = np.empty((n, n))
    f_center = f(x0)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        hess[i, i] = (f(x0 + ei) - 2.0 * f_center + f(x0 - ei)) / (h[i] * h[i])
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h[j]
            quad = f(x0 + ei + ej) - f(x0 + ei - ej) - f(x0 - ei + ej) + f(x0 - ei - ej)
            hess[i, j] = hess[j, i] = quad / (4.0 * h[i] * h[j])
    return 0.5 * (hess + hess.T)
