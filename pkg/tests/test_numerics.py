"""Tests for distribution helpers, the simplex optimizer and the Hessian.

Oracles are independent routes: the stdlib erf/erfc, closed-form
chi-squared tails for even df, trapezoid quadrature of the density for odd
df, and analytic derivatives.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mercast.exceptions import DifferentiationError
from mercast.numerics import (
    OptimizerOptions,
    chi_squared_sf,
    nelder_mead,
    normal_quantile,
    numerical_hessian,
)


def phi(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


class TestNormalQuantile:
    def test_reference_constants(self):
        assert normal_quantile(0.975) == pytest.approx(1.959963985, abs=1e-8)
        assert normal_quantile(0.9) == pytest.approx(1.2815516, abs=1e-6)
        assert normal_quantile(0.5) == 0.0

    @given(p=st.floats(1e-10, 1 - 1e-10))
    def test_inverts_erf_cdf(self, p):
        assert phi(normal_quantile(p)) == pytest.approx(p, abs=1e-12)

    @given(p=st.floats(1e-6, 0.5))
    def test_symmetry(self, p):
        assert normal_quantile(1.0 - p) == pytest.approx(-normal_quantile(p), abs=1e-10)

    def test_domain(self):
        for p in (0.0, 1.0, -0.1, 1.1):
            with pytest.raises(ValueError):
                normal_quantile(p)


def chi2_sf_even(x: float, df: int) -> float:
    # closed form for even df: exp(-x/2) * sum_{j<df/2} (x/2)^j / j!
    half = x / 2.0
    return math.exp(-half) * sum(half**j / math.factorial(j) for j in range(df // 2))


def chi2_sf_quadrature(x: float, df: int) -> float:
    grid = np.linspace(x, x + 120.0, 2_000_001)
    log_pdf = (
        (df / 2.0 - 1.0) * np.log(np.maximum(grid, 1e-300))
        - grid / 2.0
        - (df / 2.0) * math.log(2.0)
        - math.lgamma(df / 2.0)
    )
    return float(np.trapezoid(np.exp(log_pdf), grid))


class TestChiSquaredSf:
    @pytest.mark.parametrize("df", [2, 4, 6, 10, 24])
    @pytest.mark.parametrize("x", [0.3, 1.0, 5.0, 18.31, 61.301])
    def test_even_df_closed_form(self, x, df):
        assert chi_squared_sf(x, df) == pytest.approx(chi2_sf_even(x, df), rel=1e-12)

    def test_df1_matches_erfc(self):
        for x in (0.1, 1.0, 3.841458820694124, 9.0):
            assert chi_squared_sf(x, 1) == pytest.approx(math.erfc(math.sqrt(x / 2.0)), rel=1e-12)

    @pytest.mark.parametrize("df", [3, 7])
    @pytest.mark.parametrize("x", [0.5, 4.0, 15.0])
    def test_odd_df_quadrature(self, x, df):
        assert chi_squared_sf(x, df) == pytest.approx(chi2_sf_quadrature(x, df), abs=3e-9)

    def test_boundaries_and_tail(self):
        assert chi_squared_sf(0.0, 5) == 1.0
        assert chi_squared_sf(1000.0, 5) < 1e-200
        assert chi_squared_sf(1000.0, 5) > 0.0

    @given(df=st.integers(1, 30), x1=st.floats(0, 50), x2=st.floats(0, 50))
    def test_monotone_decreasing(self, df, x1, x2):
        lo, hi = sorted((x1, x2))
        assert chi_squared_sf(hi, df) <= chi_squared_sf(lo, df) + 1e-15

    def test_domain(self):
        with pytest.raises(ValueError):
            chi_squared_sf(-1.0, 3)
        with pytest.raises(ValueError):
            chi_squared_sf(1.0, 0)


def rosenbrock(v: np.ndarray) -> float:
    return float(100.0 * (v[1] - v[0] ** 2) ** 2 + (1.0 - v[0]) ** 2)


class TestNelderMead:
    def test_quadratic_bowl(self):
        target = np.array([3.0, -1.5, 0.25, 7.0])
        res = nelder_mead(lambda v: float(np.sum((v - target) ** 2)), np.zeros(4))
        assert res.converged
        np.testing.assert_allclose(res.x, target, atol=1e-6)
        assert res.fun == pytest.approx(0.0, abs=1e-12)

    def test_rosenbrock(self):
        opts = OptimizerOptions(max_iterations=5000, fatol=1e-14, initial_step=0.5)
        res = nelder_mead(rosenbrock, np.array([-1.2, 1.0]), opts)
        assert res.converged
        np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-4)
        assert res.fun < 1e-9

    def test_one_dimensional(self):
        res = nelder_mead(lambda v: float((v[0] - 2.0) ** 4), np.array([10.0]))
        assert res.x[0] == pytest.approx(2.0, abs=1e-2)

    def test_budget_exhaustion_flags_not_converged(self):
        opts = OptimizerOptions(max_iterations=3, fatol=1e-15)
        res = nelder_mead(rosenbrock, np.array([-1.2, 1.0]), opts)
        assert not res.converged
        assert res.iterations == 6
        assert res.fun <= rosenbrock(np.array([-1.2, 1.0]))

    def test_constant_objective_converges_immediately(self):
        res = nelder_mead(lambda v: 5.0, np.array([1.0, 2.0]))
        assert res.converged
        assert res.fun == 5.0
        assert res.iterations == 0

    def test_penalty_walls_are_retreated_from(self):
        def walled(v: np.ndarray) -> float:
            if np.any(np.abs(v) > 2.0):
                return math.inf
            return float(np.sum((v - 1.9) ** 2))

        res = nelder_mead(walled, np.array([1.5, 1.5]), OptimizerOptions(initial_step=0.8))
        np.testing.assert_allclose(res.x, [1.9, 1.9], atol=1e-5)

    def test_rejects_non_finite_start(self):
        with pytest.raises(ValueError):
            nelder_mead(lambda v: math.nan, np.array([0.0]))

    def test_rejects_empty_start(self):
        with pytest.raises(ValueError):
            nelder_mead(lambda v: 0.0, np.array([]))

    def test_never_worse_than_start(self):
        # even a hostile surface cannot yield a result above f(x0)
        rng = np.random.default_rng(3)

        def noisy(v: np.ndarray) -> float:
            return float(np.sum(v**2) + math.sin(50.0 * float(np.sum(v))))

        for _ in range(5):
            x0 = rng.normal(size=3)
            res = nelder_mead(noisy, x0, OptimizerOptions(max_iterations=40))
            assert res.fun <= noisy(x0) + 1e-12

    def test_option_validation(self):
        with pytest.raises(ValueError):
            OptimizerOptions(max_iterations=0)
        with pytest.raises(ValueError):
            OptimizerOptions(fatol=0.0)
        with pytest.raises(ValueError):
            nelder_mead(lambda v: 0.0, np.array([1.0]), OptimizerOptions(initial_step=0.0))


class TestNumericalHessian:
    def test_quartic_second_derivative(self):
        # d2/dx2 x^4 = 12 x^2 = 12 at x=1
        h = numerical_hessian(lambda v: float(v[0] ** 4), np.array([1.0]))
        assert h[0, 0] == pytest.approx(12.0, abs=1e-3)

    def test_quadratic_form_recovers_matrix(self):
        a = np.array([[4.0, 1.0, -0.5], [1.0, 3.0, 0.2], [-0.5, 0.2, 2.0]])

        def f(v: np.ndarray) -> float:
            return float(0.5 * v @ a @ v)

        np.testing.assert_allclose(numerical_hessian(f, np.zeros(3)), a, rtol=1e-4)
        # away from the origin rounding noise grows with |f| but stays small
        np.testing.assert_allclose(numerical_hessian(f, np.array([0.3, -0.7, 1.1])), a, atol=5e-4)

    def test_mixed_partials(self):
        # f = exp(x) sin(y): fxx = e^x sin y, fxy = e^x cos y, fyy = -e^x sin y
        x, y = 0.3, 0.7
        h = numerical_hessian(lambda v: math.exp(v[0]) * math.sin(v[1]), np.array([x, y]))
        ex = math.exp(x)
        expected = np.array(
            [[ex * math.sin(y), ex * math.cos(y)], [ex * math.cos(y), -ex * math.sin(y)]]
        )
        np.testing.assert_allclose(h, expected, atol=2e-4)
        np.testing.assert_array_equal(h, h.T)

    def test_non_finite_objective_raises(self):
        with pytest.raises(DifferentiationError):
            numerical_hessian(lambda v: math.inf, np.array([1.0]))

    @settings(max_examples=25, deadline=None)
    @given(dim=st.integers(1, 4), seed=st.integers(0, 10_000))
    def test_random_quadratics(self, dim, seed):
        rng = np.random.default_rng(seed)
        m = rng.normal(size=(dim, dim))
        a = m @ m.T + dim * np.eye(dim)
        x0 = rng.normal(size=dim)
        h = numerical_hessian(lambda v: float(0.5 * v @ a @ v), x0)
        np.testing.assert_allclose(h, a, rtol=1e-3, atol=1e-3)
