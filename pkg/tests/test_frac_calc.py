"""Fractional derivatives, norms and the pathwise integral."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from wienerlab import frac_calc, gauss_sim
from wienerlab.errors import DegenerateInterval, InvalidParameter, NormDivergence
from wienerlab.frac_calc import FracParams
from wienerlab.paths import GridFunction, uniform_grid


def grid(n=1024, a=0.0, b=1.0):
    return np.linspace(a, b, n + 1)


def right_quad(fn, x, b, alpha):
    body, _ = integrate.quad(lambda y: (fn(x) - fn(y)) / (y - x) ** (alpha + 1), x, b, limit=200, epsabs=1e-13)
    return (fn(x) / (b - x) ** alpha + alpha * body) / special.gamma(1 - alpha)


class TestLeftDerivative:
    @pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
    @pytest.mark.parametrize("c", [1.0, -3.0])
    def test_constant(self, alpha, c):
        x = grid(256, 0.5, 2.0)
        d = frac_calc.rl_derivative_left(GridFunction(x, np.full_like(x, c)), FracParams(alpha, 0.5, 2.0))
        exact = c / (special.gamma(1 - alpha) * (d.times - 0.5) ** alpha)
        np.testing.assert_allclose(d.values, exact, rtol=1e-12)

    def test_one_over_sqrt_pi(self):
        x = grid(64)
        d = frac_calc.rl_derivative_left(GridFunction(x, np.ones_like(x)), FracParams(0.5, 0, 1))
        assert d.values[-1] == pytest.approx(1 / math.sqrt(math.pi), rel=1e-13)
        assert d.times[0] > 0  # the singular endpoint is dropped

    # x^0.5 is only 1/2-Hoelder at the endpoint, which costs accuracy
    @pytest.mark.parametrize("beta,tol", [(0.5, 1e-3), (1.0, 1e-4), (1.5, 1e-4), (2.0, 1e-4)])
    def test_power_rule(self, beta, tol):
        alpha = 0.4
        x = grid(4096)
        d = frac_calc.rl_derivative_left(GridFunction(x, x**beta), FracParams(alpha, 0, 1))
        exact = special.gamma(beta + 1) / special.gamma(beta + 1 - alpha) * d.times ** (beta - alpha)
        err = np.max(np.abs(d.values - exact)[d.times > 0.01])
        print(beta, err)
        assert err < tol

    def test_interval_validation(self):
        with pytest.raises(DegenerateInterval):
            FracParams(0.3, 1.0, 0.5)
        with pytest.raises(InvalidParameter):
            FracParams(1.2, 0.0, 1.0)


class TestRightDerivative:
    def test_constant(self):
        x = grid(128)
        d = frac_calc.rl_derivative_right(GridFunction(x, 2 * np.ones_like(x)), FracParams(0.3, 0, 1))
        exact = 2 / (special.gamma(0.7) * (1 - d.times) ** 0.3)
        np.testing.assert_allclose(d.values, exact, rtol=1e-12)

    def test_linear_against_quadrature(self):
        x = grid(4096)
        fn = lambda y: 1.0 - y  # noqa: E731
        d = frac_calc.rl_derivative_right(GridFunction(x, fn(x)), FracParams(0.25, 0, 1))
        idx = np.linspace(0, d.times.size - 2, 9).astype(int)
        err = max(abs(d.values[i] - right_quad(fn, d.times[i], 1.0, 0.25)) for i in idx)
        print("max err", err)
        assert err < 1e-4

    def test_reflection(self):
        x = grid(512)
        f = np.sin(4 * x) + x**2
        p = FracParams(0.35, 0, 1)
        right = frac_calc.rl_derivative_right(GridFunction(x, f), p)
        left = frac_calc.rl_derivative_left(GridFunction(x, f[::-1]), p)
        np.testing.assert_allclose(right.values, left.values[::-1], rtol=1e-6, atol=1e-12)


class TestHolderNorm:
    def test_zero(self):
        x = grid(64)
        assert frac_calc.holder_norm(GridFunction(x, 0 * x), 0.3, 1.0) == 0.0

    @pytest.mark.parametrize("alpha", [0.1, 0.25, 0.45])
    def test_constant(self, alpha):
        x = grid(256)
        val = frac_calc.holder_norm(GridFunction(x, np.ones_like(x)), alpha, 1.0)
        assert val == pytest.approx(1 / (1 - alpha), rel=1e-12)

    def test_linear_against_quadrature(self):
        alpha = 0.25
        x = grid(4096)
        val = frac_calc.holder_norm(GridFunction(x, x), alpha, 1.0)
        inner = lambda s: s ** (1 - alpha) + integrate.quad(lambda u: (s - u) ** (-alpha), 0, s)[0]  # noqa: E731
        oracle = integrate.quad(inner, 0, 1, epsabs=1e-12)[0]
        print(val, oracle)
        assert val == pytest.approx(oracle, abs=1e-4)

    def test_subinterval(self):
        x = grid(256)
        f = GridFunction(x, np.ones_like(x))
        # on [1/2, 1] the singular term integrates (s - 1/2)^{-alpha}
        assert frac_calc.holder_norm(f, 0.3, 1.0, start=0.5) == pytest.approx(0.5**0.7 / 0.7, rel=1e-12)

    def test_path_monotone(self):
        x = grid(128)
        f = GridFunction(x, np.sin(6 * x))
        path = frac_calc.holder_norm_path(f, 0.3)
        assert np.all(np.diff(path) >= 0)


class TestLambda:
    def test_constant(self):
        x = grid(64)
        assert frac_calc.lambda_alpha(GridFunction(x, 0 * x + 3), 0.4) == 0.0

    @pytest.mark.parametrize("alpha", [0.3, 0.6])
    def test_identity(self, alpha):
        x = grid(512)
        val = frac_calc.lambda_alpha(GridFunction(x, x), alpha)
        beta = 1 - alpha
        # brute-force oracle at the extremal pair s = 0, t = 1 of g_{t-}(u) = u - 1
        oracle = abs(right_quad(lambda u: u - 1.0, 0.0, 1.0, beta))
        print(val, oracle, 1 / special.gamma(1 + alpha))
        assert val == pytest.approx(oracle, rel=1e-3)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3), st.integers(0, 1000))
    def test_scaling(self, c, seed):
        x = grid(64)
        g = np.cumsum(np.random.default_rng(seed).standard_normal(65)) / 8
        a = frac_calc.lambda_alpha(GridFunction(x, c * g), 0.4)
        b = frac_calc.lambda_alpha(GridFunction(x, g), 0.4)
        assert a == pytest.approx(abs(c) * b, rel=1e-10)


class TestGLS:
    def test_unit_integrand(self):
        _, B = gauss_sim.sample_exact_array(gauss_sim.GaussianModel.fbm(0.7), 512, 1, seed=4)
        x = uniform_grid(1.0, 512)
        val = frac_calc.gls_integral(GridFunction(x, np.ones_like(x)), GridFunction(x, B[0]), 0.32)
        assert val == pytest.approx(B[0, -1] - B[0, 0], abs=1e-8)

    @pytest.mark.parametrize("refine", [True, False])
    def test_smooth_against_lebesgue(self, refine):
        x = grid(4096)
        f = np.exp(-x) * np.cos(5 * x)
        val = frac_calc.gls_integral(GridFunction(x, f), GridFunction(x, x), 0.3, refine=refine)
        oracle = integrate.quad(lambda s: np.exp(-s) * np.cos(5 * s), 0, 1)[0]
        print(refine, val - oracle)
        assert abs(val - oracle) < 1e-3

    def test_young_chain_rule(self):
        times, B = gauss_sim.sample_exact_array(gauss_sim.GaussianModel.fbm(0.7), 4096, 5, seed=1)
        for row in B:
            g = GridFunction(times, row)
            val = frac_calc.gls_integral(g, g)
            print(val, 0.5 * row[-1] ** 2)
            assert abs(val - 0.5 * row[-1] ** 2) < 0.01 * 0.5 * np.max(row**2)

    def test_grid_mismatch(self):
        with pytest.raises(InvalidParameter):
            frac_calc.gls_integral(GridFunction(grid(8), np.zeros(9)), GridFunction(grid(16), np.zeros(17)))

    def test_norm_divergence_flag(self):
        x = grid(1024)
        f = np.random.default_rng(0).choice([-1.0, 1.0], x.size)
        with pytest.raises(NormDivergence):
            frac_calc.gls_integral(GridFunction(x, f), GridFunction(x, x), 0.4)
        frac_calc.gls_integral(GridFunction(x, f), GridFunction(x, x), 0.4, check_norm=False)


@pytest.mark.parametrize("theta", [0.55, 0.7, 0.9])
def test_default_alpha_in_window(theta):
    a = frac_calc.default_alpha(theta)
    assert 1 - theta < a < 0.5
