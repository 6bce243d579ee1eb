"""Optimal terminal profiles, budget multipliers and concavity probes."""

import math

import numpy as np
import pytest

from wienerlab import gauss_sim, pricing, utility
from wienerlab.errors import InvalidParameter
from wienerlab.paths import uniform_grid
from wienerlab.utility import UtilitySpec


def kernel(theta0, n_paths=10_000, n=64, seed=3):
    times = uniform_grid(1.0, n)
    dW = gauss_sim.wiener_increments(n, n_paths, seed)
    W = np.concatenate([np.zeros((n_paths, 1)), np.cumsum(dW, axis=1)], axis=1)
    return pricing.sample_kernel_array(pricing.ThetaSpec.constant(theta0), times, W)


@pytest.fixture(scope="module")
def k03():
    return kernel(0.3)


class TestInverseMarginal:
    @pytest.mark.parametrize(
        "u,y,expected",
        [
            (UtilitySpec.exponential(2.0), 2.0, 0.0),
            (UtilitySpec.power(0.5), 4.0, 0.0625),
            (UtilitySpec.log(), 2.0, 0.5),
        ],
    )
    def test_values(self, u, y, expected):
        assert utility.inverse_marginal(u, y) == pytest.approx(expected, abs=1e-15)

    @pytest.mark.parametrize("u", [UtilitySpec.exponential(1.5), UtilitySpec.power(0.3), UtilitySpec.log()])
    def test_inverts_marginal(self, u):
        x = np.array([0.2, 1.0, 3.0])
        np.testing.assert_allclose(utility.inverse_marginal(u, u.marginal(x)), x, rtol=1e-12)

    def test_half_line_extension(self):
        u = UtilitySpec.log()
        assert utility.inverse_marginal(u, 0.0) == np.inf
        assert utility.inverse_marginal(u, np.inf) == 0.0

    @pytest.mark.parametrize("bad", [lambda: UtilitySpec.exponential(0), lambda: UtilitySpec.power(1.0), lambda: UtilitySpec.power(0)])
    def test_parameter_checks(self, bad):
        with pytest.raises(InvalidParameter):
            bad()


class TestProfiles:
    def test_zero_theta(self):
        k = kernel(0.0, n_paths=200)
        for u in (UtilitySpec.exponential(1.0), UtilitySpec.power(0.5), UtilitySpec.log()):
            prof = utility.optimal_profile(u, 1.5, k)
            np.testing.assert_allclose(prof.x_star, 1.5, rtol=1e-14)
        e = utility.optimal_profile(UtilitySpec.exponential(1.0), 1.5, k)
        assert e.expected_utility == pytest.approx(1 - math.exp(-1.5))
        p = utility.optimal_profile(UtilitySpec.power(0.5), 1.5, k)
        assert p.expected_utility == pytest.approx(1.5**0.5 / 0.5)

    def test_exponential_zero_wealth(self, k03):
        prof = utility.optimal_profile(UtilitySpec.exponential(1.0), 0.0, k03)
        oracle = 1 - math.exp(-0.045)
        print(prof.expected_utility, oracle, prof.se)
        assert abs(prof.expected_utility - oracle) < 5 * prof.se

    @pytest.mark.parametrize("u", [UtilitySpec.exponential(1.0), UtilitySpec.power(0.5), UtilitySpec.log()])
    def test_budget(self, k03, u):
        prof = utility.optimal_profile(u, 1.0, k03)
        print(u.kind, prof.budget_residual, prof.budget_se)
        assert prof.budget_residual < 5 * prof.budget_se or prof.budget_residual < 1e-12

    def test_power_d(self, k03):
        prof = utility.optimal_profile(UtilitySpec.power(0.5), 1.0, k03)
        assert abs(prof.d.value - math.exp(0.09)) < 5 * prof.d.se
        assert prof.c_star ** (-1 / 0.5) == pytest.approx(1.0 / prof.d.value, rel=1e-12)

    def test_log_needs_positive_wealth(self, k03):
        with pytest.raises(InvalidParameter):
            utility.optimal_profile(UtilitySpec.log(), 0.0, k03)

    def test_report_keys(self, k03):
        rep = utility.optimal_profile(UtilitySpec.power(0.5), 1.0, k03).report()
        assert {"expected_utility", "SE", "closed_form", "budget_residual", "d"} <= rep.keys()


class TestBudgetMultiplier:
    def test_exponential_trivial(self):
        k = kernel(0.0, n_paths=50)
        c = utility.solve_budget_multiplier(UtilitySpec.exponential(2.0), 0.7, k)
        assert c == pytest.approx(2.0 * math.exp(-1.4), rel=1e-7)

    @pytest.mark.parametrize("u", [UtilitySpec.exponential(1.0), UtilitySpec.power(0.5), UtilitySpec.log()])
    def test_root_satisfies_budget(self, k03, u):
        c = utility.solve_budget_multiplier(u, 1.0, k03)
        x = utility.inverse_marginal(u, c * k03.phi_T)
        assert np.mean(k03.phi_T * x) == pytest.approx(1.0, abs=1e-7)

    @pytest.mark.parametrize("u", [UtilitySpec.power(0.5), UtilitySpec.log()])
    def test_matches_profile(self, k03, u):
        # these profiles meet the sample budget exactly, so the roots agree
        c = utility.solve_budget_multiplier(u, 1.0, k03)
        assert c == pytest.approx(utility.optimal_profile(u, 1.0, k03).c_star, rel=1e-6)

    def test_exponential_close_to_profile(self, k03):
        # the profile uses the entropy estimate; its multiplier differs from
        # the sample root by the budget noise, exp(beta * residual) - 1
        u = UtilitySpec.exponential(1.0)
        prof = utility.optimal_profile(u, 1.0, k03)
        c = utility.solve_budget_multiplier(u, 1.0, k03)
        print(c, prof.c_star, prof.budget_se)
        assert abs(math.log(c / prof.c_star)) < 5 * prof.budget_se

    def test_power_monotone_in_wealth(self, k03):
        u = UtilitySpec.power(0.5)
        assert utility.solve_budget_multiplier(u, 2.0, k03) < utility.solve_budget_multiplier(u, 1.0, k03)


class TestProbes:
    def test_zero_perturbation(self, k03):
        u = UtilitySpec.power(0.5)
        prof = utility.optimal_profile(u, 1.0, k03)
        res = utility.optimality_probe(u, 1.0, k03, prof.x_star, n_probes=3, scale=0.0)
        assert res.worst_gap == 0.0

    @pytest.mark.parametrize("u", [UtilitySpec.exponential(1.0), UtilitySpec.power(0.5), UtilitySpec.log()])
    def test_concavity(self, k03, u):
        prof = utility.optimal_profile(u, 1.0, k03)
        res = utility.optimality_probe(u, 1.0, k03, prof.x_star, n_probes=100)
        print(u.kind, res)
        assert res.worst_gap >= -5 * res.se
        assert res.n_used > 50

    def test_suboptimal_profile_detected(self, k03):
        u = UtilitySpec.log()
        res = utility.optimality_probe(u, 1.0, k03, np.ones(len(k03)) * 1.0 / np.mean(k03.phi_T), n_probes=50)
        print(res)
        assert res.worst_gap < 0
