"""Simulation of Wiener-transformable Gaussian processes.

Supported families: Wiener process, fBm, fractional Ornstein-Uhlenbeck,
subfractional and bifractional Brownian motion, mixed fBm, finite linear
combinations of independent fBms and generic Volterra transforms of a Wiener
process. All grids are uniform, ``t_k = k T / n_steps``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable

import numpy as np
from scipy import linalg

from . import rng as _rng
from . import volterra
from .errors import (
    FactorizationFailure,
    InsufficientPaths,
    InvalidParameter,
    UnsupportedKind,
)
from .paths import SamplePath, as_array, from_array, uniform_grid

KINDS = ("wiener", "fbm", "fou", "subfractional", "bifractional", "mixed", "fbm_combo", "volterra")
SCHEMA_VERSION = 1


def _hurst(H, name="H"):
    H = float(H)
    if not 0.0 < H < 1.0:
        raise InvalidParameter(f"{name} must lie in (0, 1), got {H}")
    return H


@dataclass(frozen=True)
class GaussianModel:
    """Tagged description of a Gaussian process family.

    Use the class-method constructors rather than building ``params`` by hand;
    they validate the parameters.
    """

    kind: str
    params: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))
    T: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnsupportedKind(f"unknown model kind {self.kind!r}")
        if not float(self.T) > 0:
            raise InvalidParameter("horizon T must be positive")
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))

    # constructors --------------------------------------------------------
    @classmethod
    def wiener(cls, T=1.0):
        return cls("wiener", {}, T)

    @classmethod
    def fbm(cls, H, T=1.0):
        return cls("fbm", {"H": _hurst(H)}, T)

    @classmethod
    def fou(cls, a, b, sigma, H, y0=0.0, T=1.0):
        sigma = float(sigma)
        if sigma < 0 or not math.isfinite(sigma):
            raise InvalidParameter("sigma must be >= 0")
        return cls("fou", {"a": float(a), "b": float(b), "sigma": sigma, "H": _hurst(H), "y0": float(y0)}, T)

    @classmethod
    def subfractional(cls, H, T=1.0):
        return cls("subfractional", {"H": _hurst(H)}, T)

    @classmethod
    def bifractional(cls, H, K, T=1.0):
        return cls("bifractional", {"H": _hurst(H), "K": _hurst(K, "K")}, T)

    @classmethod
    def mixed(cls, H, T=1.0):
        return cls("mixed", {"H": _hurst(H)}, T)

    @classmethod
    def fbm_combo(cls, weights, hursts, T=1.0):
        w = tuple(float(x) for x in weights)
        hs = tuple(_hurst(x) for x in hursts)
        if len(w) != len(hs) or not w:
            raise InvalidParameter("weights and hursts must be non-empty and equally long")
        if not all(math.isfinite(x) for x in w):
            raise InvalidParameter("combo weights must be finite")
        return cls("fbm_combo", {"weights": w, "hursts": hs}, T)

    @classmethod
    def volterra(cls, kernel: Callable, r: float = 0.0, T=1.0):
        if not callable(kernel):
            raise InvalidParameter("kernel must be callable K(t, s)")
        return cls("volterra", {"kernel": kernel, "r": float(r)}, T)

    def to_dict(self) -> dict:
        p = {k: v for k, v in self.params.items() if k != "kernel"}
        return {"kind": self.kind, "params": {k: list(v) if isinstance(v, tuple) else v for k, v in p.items()}, "T": self.T}


# ---------------------------------------------------------------------------
# covariances
# ---------------------------------------------------------------------------


def _fbm_cov(s, t, H):
    return 0.5 * (s ** (2 * H) + t ** (2 * H) - np.abs(t - s) ** (2 * H))


def covariance(model: GaussianModel, s, t):
    """Closed-form covariance R(s, t); broadcasts over arrays.

    Raises
    ------
    UnsupportedKind
        For ``fou`` and ``volterra`` models, whose covariances have no closed
        form here.
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0) or np.any(s > model.T * (1 + 1e-12)) or np.any(t > model.T * (1 + 1e-12)):
        raise InvalidParameter("times must lie in [0, T]")
    p = model.params
    k = model.kind
    if k == "wiener":
        out = np.minimum(s, t)
    elif k == "fbm":
        out = _fbm_cov(s, t, p["H"])
    elif k == "subfractional":
        H2 = 2 * p["H"]
        out = s**H2 + t**H2 - 0.5 * ((s + t) ** H2 + np.abs(t - s) ** H2)
    elif k == "bifractional":
        H, K = p["H"], p["K"]
        out = 2.0 ** (-K) * ((t ** (2 * H) + s ** (2 * H)) ** K - np.abs(t - s) ** (2 * H * K))
    elif k == "mixed":
        out = np.minimum(s, t) + _fbm_cov(s, t, p["H"])
    elif k == "fbm_combo":
        out = sum(a * a * _fbm_cov(s, t, H) for a, H in zip(p["weights"], p["hursts"]))
    else:
        raise UnsupportedKind(f"no closed-form covariance for kind {k!r}")
    return out[()] if np.ndim(out) == 0 else out


def covariance_matrix(model: GaussianModel, times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    return covariance(model, times[:, None], times[None, :])


def _cholesky(cov: np.ndarray) -> np.ndarray:
    # jitter 1e-12 escalating by 10 up to 1e-8, scaled to the matrix size
    scale = max(float(np.max(np.diag(cov))), 1e-300)
    try:
        return linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError:
        pass
    jitter = 1e-12
    while jitter <= 1e-8 * (1 + 1e-9):
        try:
            return linalg.cholesky(cov + jitter * scale * np.eye(cov.shape[0]), lower=True)
        except linalg.LinAlgError:
            jitter *= 10.0
    raise FactorizationFailure("covariance matrix is not numerically positive semidefinite")


def _factor(model: GaussianModel, n_steps: int):
    times = uniform_grid(model.T, n_steps)
    cov = covariance_matrix(model, times[1:])
    return times, _cholesky(cov)


def sample_exact_array(model, n_steps, n_paths, seed, workers=1, stream=_rng.STREAM_GAUSS):
    """Array version of :func:`simulate_exact`: returns ``(times, values)``."""
    n_steps = int(n_steps)
    n_paths = int(n_paths)
    if n_steps < 1 or n_paths < 1:
        raise InvalidParameter("n_steps and n_paths must be >= 1")
    seed = _rng.check_seed(seed)
    times, L = _factor(model, n_steps)

    def chunk(a, b):
        z = _rng.normals(seed, b - a, n_steps, stream, start=a)
        out = np.zeros((b - a, n_steps + 1))
        out[:, 1:] = z @ L.T
        return out

    return times, _rng.map_chunks(chunk, n_paths, workers)


def simulate_exact(model: GaussianModel, n_steps: int, n_paths: int, seed: int, workers=1) -> list[SamplePath]:
    """Exact Gaussian sampling on the uniform grid by Cholesky factorization.

    Parameters
    ----------
    model : GaussianModel
        Any kind with a closed-form covariance.
    n_steps, n_paths : int
    seed : int
        Non-negative; path ``i`` uses the stream ``(seed, i)``.
    workers : int
        Thread cap. Results do not depend on it.

    Returns
    -------
    list of SamplePath
        Paths start at 0 with ``seed_id`` equal to the path index.
    """
    times, vals = sample_exact_array(model, n_steps, n_paths, seed, workers)
    return from_array(times, vals)


# ---------------------------------------------------------------------------
# Volterra constructions
# ---------------------------------------------------------------------------


def wiener_increments(n_steps, n_paths, seed, T=1.0, start=0, workers=1):
    h = T / n_steps

    def chunk(a, b):
        return _rng.normals(seed, b - a, n_steps, _rng.STREAM_WIENER, start=start + a) * math.sqrt(h)

    return _rng.map_chunks(chunk, n_paths, workers)


def fbm_volterra_array(H, n_steps, n_paths, seed, T=1.0, workers=1):
    """Batch of (times, fbm, wiener) built from shared Wiener increments."""
    H = volterra.check_hurst_half(H)
    n_steps = int(n_steps)
    times = uniform_grid(T, n_steps)
    dW = wiener_increments(n_steps, n_paths, seed, T, workers=workers)
    W = np.zeros((n_paths, n_steps + 1))
    W[:, 1:] = np.cumsum(dW, axis=1)
    if H == 0.5:
        return times, W.copy(), W
    M = volterra.forward_matrix(H, n_steps, T)

    def chunk(a, b):
        return volterra.apply_lower(M, dW[a:b])

    B = _rng.map_chunks(chunk, n_paths, workers)
    return times, B, W


def simulate_fbm_volterra(H: float, n_steps: int, seed: int, T: float = 1.0):
    """One fBm path and its driving Wiener path.

    The fBm is the discretised Volterra integral of the Wiener increments
    against the forward kernel. Requires ``1/2 <= H < 1``; at ``H = 1/2`` the
    two paths coincide.

    Returns
    -------
    fbm, wiener : SamplePath
    """
    times, B, W = fbm_volterra_array(H, n_steps, 1, seed, T)
    return SamplePath(times, B[0], 0), SamplePath(times, W[0], 0)


def simulate_fou(a, b, sigma, H, y0, n_steps, n_paths, seed, T=1.0, workers=1) -> list[SamplePath]:
    """Euler scheme for ``dY = (b - a Y) dt + sigma dB^H`` on exact fBm paths.

    The driving fBm is the one :func:`simulate_exact` returns for
    ``GaussianModel.fbm(H)`` with the same seed.
    """
    model = GaussianModel.fou(a, b, sigma, H, y0, T)
    times, Y = fou_array(model, n_steps, n_paths, seed, workers)
    return from_array(times, Y)


def fou_array(model: GaussianModel, n_steps, n_paths, seed, workers=1):
    p = model.params
    times, B = sample_exact_array(GaussianModel.fbm(p["H"], model.T), n_steps, n_paths, seed, workers)
    h = model.T / n_steps
    dB = np.diff(B, axis=1)
    Y = np.empty_like(B)
    Y[:, 0] = p["y0"]
    a, b, sig = p["a"], p["b"], p["sigma"]
    for k in range(n_steps):
        Y[:, k + 1] = Y[:, k] + (b - a * Y[:, k]) * h + sig * dB[:, k]
    return times, Y


def volterra_kernel_matrix(kernel, T, n_steps, nodes=8):
    """Cell averages of ``K(t_k, s)`` over ``s`` in cell j (Gauss-Legendre)."""
    times = uniform_grid(T, n_steps)
    h = T / n_steps
    x, w = np.polynomial.legendre.leggauss(nodes)
    M = np.zeros((n_steps, n_steps))
    for k in range(1, n_steps + 1):
        s = (np.arange(k)[:, None] + 0.5 * (x[None, :] + 1.0)) * h
        vals = np.asarray(kernel(times[k], s), dtype=float)
        M[k - 1, :k] = (vals * (0.5 * w)[None, :]).sum(axis=1)
    if not np.all(np.isfinite(M)):
        raise InvalidParameter("kernel returned non-finite values")
    return M


def simulate_volterra(kernel, n_steps, n_paths, seed, T=1.0, workers=1):
    """Generic ``G(t) = int_0^t K(t, s) dW(s)`` with the driving Wiener paths.

    Returns
    -------
    (list of SamplePath, list of SamplePath)
        Process paths and Wiener paths.
    """
    times = uniform_grid(T, n_steps)
    M = volterra_kernel_matrix(kernel, T, n_steps)
    dW = wiener_increments(n_steps, n_paths, seed, T, workers=workers)
    G = _rng.map_chunks(lambda a, b: volterra.apply_lower(M, dW[a:b]), n_paths, workers)
    W = np.zeros_like(G)
    W[:, 1:] = np.cumsum(dW, axis=1)
    return from_array(times, G), from_array(times, W)


def simulate_array(model: GaussianModel, n_steps, n_paths, seed, workers=1):
    """Dispatch on model kind; returns ``(times, values)``."""
    if model.kind == "fou":
        return fou_array(model, n_steps, n_paths, seed, workers)
    if model.kind == "volterra":
        times = uniform_grid(model.T, n_steps)
        M = volterra_kernel_matrix(model.params["kernel"], model.T, n_steps)
        dW = wiener_increments(n_steps, n_paths, seed, model.T, workers=workers)
        return times, _rng.map_chunks(lambda a, b: volterra.apply_lower(M, dW[a:b]), n_paths, workers)
    return sample_exact_array(model, n_steps, n_paths, seed, workers)


def simulate(model: GaussianModel, n_steps, n_paths, seed, workers=1) -> list[SamplePath]:
    times, vals = simulate_array(model, n_steps, n_paths, seed, workers)
    return from_array(times, vals)


# ---------------------------------------------------------------------------
# conditions (A) and (B)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionReport:
    H1_est: float
    H2_est: float
    condA_pass: bool
    condB_pass: bool
    min_increment_corr: float


def check_conditions(paths, min_paths: int = 100, block_scales=(4, 8, 16)) -> ConditionReport:
    """Empirical check of the two-sided power bounds and positive correlation.

    Scaling exponents come from log-log regressions, over dyadic lags, of the
    smallest and largest (over start times) mean squared increment. Increment
    correlation is measured between adjacent blocks of the grid split into 4,
    8 and 16 equal blocks; a correlation below ``-3 (1 - rho^2)/sqrt(N)``
    fails condition (B).
    """
    if isinstance(paths, tuple) and len(paths) == 2:
        times, X = paths
        X = np.atleast_2d(np.asarray(X, dtype=float))
    else:
        times, X = as_array(paths)
    N, npts = X.shape
    if N < min_paths:
        raise InsufficientPaths(f"need at least {min_paths} paths, got {N}")
    n = npts - 1
    if n < 8:
        raise InvalidParameter("need at least 8 grid steps")
    h = (times[-1] - times[0]) / n
    lags = []
    L = 1
    while L <= n // 4:
        lags.append(L)
        L *= 2
    lo, hi = [], []
    for L in lags:
        m2 = np.mean((X[:, L:] - X[:, :-L]) ** 2, axis=0)
        lo.append(np.min(m2))
        hi.append(np.max(m2))
    x = np.log(np.asarray(lags) * h)
    slope_lo = np.polyfit(x, np.log(lo), 1)[0]
    slope_hi = np.polyfit(x, np.log(hi), 1)[0]
    H1 = 0.5 * max(slope_lo, slope_hi)
    H2 = 0.5 * min(slope_lo, slope_hi)
    condA = bool(H2 > 0.0 and H1 <= 1.0 + 0.05)

    min_corr = 1.0
    condB = True
    for nb in block_scales:
        if n % nb:
            idx = np.round(np.linspace(0, n, nb + 1)).astype(int)
        else:
            idx = np.arange(0, n + 1, n // nb)
        inc = X[:, idx[1:]] - X[:, idx[:-1]]
        inc = inc - inc.mean(axis=0)
        sd = np.sqrt(np.mean(inc**2, axis=0))
        for i in range(nb - 1):
            if sd[i] == 0 or sd[i + 1] == 0:
                continue
            rho = float(np.mean(inc[:, i] * inc[:, i + 1]) / (sd[i] * sd[i + 1]))
            min_corr = min(min_corr, rho)
            if rho < -3.0 * (1.0 - rho * rho) / math.sqrt(N):
                condB = False
    return ConditionReport(float(H1), float(H2), condA, condB, float(max(min_corr, -1.0)))


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------


def manifest(model: GaussianModel, n_steps, n_paths, seed) -> dict:
    d = model.to_dict()
    return {
        "model": d["kind"],
        "params": d["params"],
        "T": d["T"],
        "n_steps": int(n_steps),
        "n_paths": int(n_paths),
        "seed": int(seed),
        "schema_version": SCHEMA_VERSION,
    }


def manifest_json(man: dict) -> str:
    return json.dumps(man, indent=2, sort_keys=True) + "\n"
