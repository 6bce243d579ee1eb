"""Discrete fBm <-> Wiener transforms."""

import math

import numpy as np
import pytest
from scipy import special

from wienerlab import frac_calc, gauss_sim, volterra
from wienerlab.errors import InvalidParameter
from wienerlab.paths import SamplePath, uniform_grid


@pytest.mark.parametrize("H", [0.5, 0.6, 0.7, 0.9])
def test_c_h(H):
    oracle = math.sqrt(2 * H * special.gamma(H + 0.5) * special.gamma(1.5 - H) / special.gamma(2 - 2 * H))
    assert volterra.c_h(H) == pytest.approx(oracle, rel=1e-14)


def test_c_half_is_one():
    assert volterra.c_h(0.5) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("H", [0.3, 1.0])
def test_range(H):
    with pytest.raises(InvalidParameter):
        volterra.forward_matrix(H, 8)


def test_forward_covariance_close_to_fbm():
    H, n = 0.7, 64
    M = volterra.forward_matrix(H, n)
    cov = M @ M.T / n
    t = uniform_grid(1.0, n)[1:]
    oracle = gauss_sim.covariance_matrix(gauss_sim.GaussianModel.fbm(H), t)
    err = np.max(np.abs(cov - oracle))
    print("max covariance error", err)
    np.testing.assert_allclose(np.diag(cov), t ** (2 * H), rtol=1e-5)
    assert err < 0.01


class TestTransforms:
    def test_identity_at_half(self):
        _, W = gauss_sim.simulate_fbm_volterra(0.5, 32, seed=1)
        assert frac_calc.k_h_transform(W, 0.5) == W

    def test_zero_path(self):
        z = SamplePath(uniform_grid(1.0, 16), np.zeros(17))
        assert np.all(frac_calc.k_h_transform(z, 0.7).values == 0)
        assert np.all(frac_calc.inverse_transform(z, 0.7).values == 0)

    @pytest.mark.parametrize("n", [256, 512, 1024])
    def test_roundtrip(self, n):
        errs = []
        for seed in range(10):
            _, W = gauss_sim.simulate_fbm_volterra(0.5, n, seed)
            back = frac_calc.inverse_transform(frac_calc.k_h_transform(W, 0.7), 0.7)
            errs.append(np.max(np.abs(back.values - W.values)) / np.max(np.abs(W.values)))
        print(n, np.median(errs))
        assert np.median(errs) < 0.05

    def test_matches_sampler(self):
        B, W = gauss_sim.simulate_fbm_volterra(0.7, 128, seed=2)
        np.testing.assert_allclose(frac_calc.k_h_transform(W, 0.7).values, B.values, atol=1e-12)
