"""Inductive replication strategy."""

import numpy as np
import pytest

from wienerlab import frac_calc, gauss_sim, strategy
from wienerlab.errors import ConditionAViolation, InvalidParameter
from wienerlab.paths import GridFunction, SamplePath
from wienerlab.strategy import StrategySchedule


@pytest.fixture(scope="module")
def fbm_paths():
    return gauss_sim.sample_exact_array(gauss_sim.GaussianModel.fbm(0.7), 4096, 10, seed=3)


class TestHolderBudget:
    def test_equal_exponents(self):
        for case, delta in (("i", None), ("ii", 1.0), ("iii", 2.0)):
            hb = strategy.holder_budget(0.01, case, 0.7, 0.7, delta)
            assert hb.H3 == 0.0 and hb.rho0 == 0.0 and hb.admissible

    def test_arithmetic(self):
        hb = strategy.holder_budget(1.0, "i", 0.8, 0.7)
        assert hb.H3 == pytest.approx(1.7 * 0.1 / 0.4)
        assert hb.admissible == (0.5 > hb.H3)

    def test_inadmissible(self):
        assert not strategy.holder_budget(0.5, "i", 0.8, 0.7).admissible

    @pytest.mark.parametrize("H1,H2", [(0.7, 0.8), (0.8, 0.5), (1.2, 1.0)])
    def test_condition_a(self, H1, H2):
        with pytest.raises(ConditionAViolation):
            strategy.holder_budget(1.0, "i", H1, H2)

    def test_delta_required(self):
        with pytest.raises(InvalidParameter):
            strategy.holder_budget(1.0, "ii", 0.7, 0.7)


class TestSchedule:
    def test_default(self):
        s = StrategySchedule.default(4)
        assert s.n_max == 4
        np.testing.assert_allclose(s.refine_times, [0.5, 0.75, 0.875, 0.9375, 0.96875])

    @pytest.mark.parametrize(
        "t,sig,nu",
        [
            ((0.5, 0.4), (1.0,), (1.0,)),
            ((0.5, 1.0), (1.0,), (1.0,)),
            ((0.5, 0.7), (-1.0,), (1.0,)),
            ((0.5, 0.7), (1.0,), (0.0,)),
            ((0.5, 0.7, 0.9), (2.0, 1.0), (1.0, 1.0)),
        ],
    )
    def test_invalid(self, t, sig, nu):
        with pytest.raises(InvalidParameter):
            StrategySchedule(t, sig, nu)


def test_g_derivative():
    x = np.linspace(-2, 2, 41)
    nu = 0.3
    fd = (strategy.g_fn(x + 1e-6, nu) - strategy.g_fn(x - 1e-6, nu)) / 2e-6
    np.testing.assert_allclose(strategy.g_prime(x, nu), fd, atol=1e-8)
    assert strategy.g_fn(0.0, nu) == 0.0


class TestConstantTarget:
    def test_stabilises(self, fbm_paths):
        t, B = fbm_paths
        G = SamplePath(t, B[0])
        sched = StrategySchedule.default(6)
        psi, state = strategy.construct_strategy(G, SamplePath(t, np.full_like(t, 0.4)), sched)
        print(state.to_dict())
        assert np.all(state.delta[1:] == 0)
        first_hit = next(i for i, miss in enumerate(state.never_hit) if not miss)
        norms = strategy.norm_decay_check(psi, sched, 0.3)
        assert all(v == 0.0 for v in norms[first_hit + 1 :])
        assert state.V_at[-1] == pytest.approx(0.4, abs=1e-12)
        assert strategy.replication_error(state, 0.4, sched.n_max + 1)[1] < 1e-12


class TestSelfReplication:
    def test_phi1_overshoot_and_triangle(self, fbm_paths):
        t, B = fbm_paths
        sched = StrategySchedule.default(8)
        for row in B:
            G = SamplePath(t, row)
            _, state = strategy.construct_strategy(G, G, sched)
            for n in range(2, sched.n_max + 2):
                phi1, err = strategy.replication_error(state, row[-1], n)
                z_prev = state.xi[n - 1]
                assert err <= abs(z_prev - row[-1]) + phi1 + 1e-12
                if not state.never_hit[n - 2]:
                    assert phi1 < 1e-9

    def test_chain_rule(self, fbm_paths):
        t, B = fbm_paths
        G = SamplePath(t, B[1])
        _, state = strategy.construct_strategy(G, G, StrategySchedule.default(8))
        errs = []
        for seg in state.segments:
            if seg.hit and seg.target > 0:
                rs, closed = strategy.chain_rule_check(G, seg)
                errs.append(abs(rs - closed) / abs(closed))
        print(errs)
        assert errs and max(errs) < 0.01

    def test_integrand_path_agrees_with_psi(self, fbm_paths):
        t, B = fbm_paths
        G = SamplePath(t, B[2])
        psi, state = strategy.construct_strategy(G, G, StrategySchedule.default(8))
        ref = strategy.integrand_path(G, state, substeps=1)
        same = np.isclose(ref.values[:-1], psi.values[:-1], atol=1e-12)
        print("nodes differing:", np.sum(~same))
        assert np.mean(same) > 0.99

    def test_to_dict(self, fbm_paths):
        t, B = fbm_paths
        G = SamplePath(t, B[3])
        _, state = strategy.construct_strategy(G, G, StrategySchedule.default(3))
        d = state.to_dict()
        assert [lv["level"] for lv in d["levels"]] == [1, 2, 3]
        assert {lv["case"] for lv in d["levels"]} <= {"A", "B"}


def test_zero_integrand_norms():
    t = np.linspace(0, 1, 257)
    psi = GridFunction(t, np.zeros_like(t))
    assert strategy.norm_decay_check(psi, StrategySchedule.default(5), 0.3) == [0.0] * 5


def test_grid_too_coarse():
    t = np.linspace(0, 1, 9)
    G = SamplePath(t, np.linspace(0, 1, 9) ** 2)
    with pytest.raises(InvalidParameter):
        strategy.construct_strategy(G, G, StrategySchedule.default(8))
