"""Pricing kernels ``phi(T) = exp(int theta dW - 1/2 int theta^2 ds)``.

For deterministic integrands each grid cell carries one value of ``theta``:
the sign of its cell mean times its cell root-mean-square. The quadratic term
then equals ``int theta^2 ds`` exactly, the stochastic term is a left-point
sum with an ``F_{t_k}``-measurable coefficient, and every factor
``exp(theta_k dW_k - theta_k^2 h / 2)`` has mean one, so the discrete kernel
is an exact martingale on any grid.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import EntropyDivergence, InvalidParameter, NonIntegrableTheta
from .paths import SamplePath, as_array, uniform_step

THETA_KINDS = ("constant", "power_law", "example42", "custom")


def c1_c2_constants(H: float) -> tuple[float, float]:
    """Constants of the hidden-semimartingale drift for ``H`` in [1/2, 1)."""
    H = float(H)
    if not 0.5 <= H < 1.0:
        raise InvalidParameter("H must lie in [1/2, 1)")
    g = math.gamma
    c1 = (1.5 - H) ** -1 * math.sqrt(g(1.5 - H) / (2.0 * H * g(2.0 - 2.0 * H) * g(H + 0.5)))
    return c1, c1 * (1.5 - H)


@dataclass(frozen=True)
class ThetaSpec:
    """Integrand of the pricing kernel.

    Kinds
    -----
    constant(theta0)
    power_law(coeff, exponent)
        ``theta(s) = coeff * s**exponent`` with exponent > -1/2.
    example42(mu, r, sigma, H)
        ``theta(s) = -((mu - r) C2(H) / sigma * s**(1/2 - H) + sigma / 2)``,
        the density of the measure under which the transformed asset is a
        martingale.
    custom(table)
        One value per grid cell (or per grid point; the last is ignored),
        used as the left-point value of an adapted integrand.
    """

    kind: str
    params: tuple = ()
    T: float = 1.0

    def __post_init__(self):
        if self.kind not in THETA_KINDS:
            raise InvalidParameter(f"unknown theta kind {self.kind!r}")
        if not self.T > 0:
            raise InvalidParameter("T must be positive")
        p = tuple(self.params)
        object.__setattr__(self, "params", p)
        if self.kind == "constant" and len(p) != 1:
            raise InvalidParameter("constant theta takes one value")
        if self.kind == "power_law":
            if len(p) != 2:
                raise InvalidParameter("power_law takes (coeff, exponent)")
            if p[1] <= -0.5:
                raise NonIntegrableTheta("power_law exponent must exceed -1/2")
            if p[1] <= -0.25:
                warnings.warn("exponent <= -1/4: the fourth moment of theta is not integrable", stacklevel=2)
        if self.kind == "example42":
            if len(p) != 4:
                raise InvalidParameter("example42 takes (mu, r, sigma, H)")
            if p[2] <= 0:
                raise InvalidParameter("sigma must be positive")
            c1_c2_constants(p[3])
            if p[3] >= 0.75:
                warnings.warn("H >= 3/4: the fourth moment of theta is not integrable", stacklevel=2)
        if self.kind == "custom":
            arr = np.asarray(p, dtype=float)
            if arr.ndim != 1 or arr.size < 1 or not np.all(np.isfinite(arr)):
                raise InvalidParameter("custom theta table must be a finite 1-d sequence")

    @classmethod
    def constant(cls, theta0, T=1.0):
        return cls("constant", (float(theta0),), T)

    @classmethod
    def power_law(cls, coeff, exponent, T=1.0):
        return cls("power_law", (float(coeff), float(exponent)), T)

    @classmethod
    def example42(cls, mu, r, sigma, H, T=1.0):
        return cls("example42", (float(mu), float(r), float(sigma), float(H)), T)

    @classmethod
    def custom(cls, table, T=1.0):
        return cls("custom", tuple(float(x) for x in np.asarray(table, dtype=float).ravel()), T)

    def __call__(self, s):
        """Pointwise value ``theta(s)``."""
        s = np.asarray(s, dtype=float)
        k, p = self.kind, self.params
        if k == "constant":
            return np.full_like(s, p[0])
        if k == "power_law":
            with np.errstate(divide="ignore"):
                return p[0] * s ** p[1]
        if k == "example42":
            mu, r, sig, H = p
            c2 = c1_c2_constants(H)[1]
            with np.errstate(divide="ignore"):
                return -((mu - r) * c2 / sig * s ** (0.5 - H) + 0.5 * sig)
        raise InvalidParameter("custom theta has no pointwise formula")

    def cell_values(self, n_steps: int) -> np.ndarray:
        """Signed cell root-mean-square values on ``n_steps`` uniform cells."""
        n = int(n_steps)
        h = self.T / n
        a = np.arange(n) * h
        b = a + h
        k, p = self.kind, self.params
        if k == "constant":
            return np.full(n, p[0])
        if k == "power_law":
            c, e = p
            msq = c * c * _pow_cell(a, b, 2.0 * e)
            return np.sign(c) * np.sqrt(msq)
        if k == "example42":
            mu, r, sig, H = p
            A = (mu - r) * c1_c2_constants(H)[1] / sig
            B = 0.5 * sig
            e = 0.5 - H
            mean = -(A * _pow_cell(a, b, e) + B)
            msq = A * A * _pow_cell(a, b, 2.0 * e) + 2.0 * A * B * _pow_cell(a, b, e) + B * B
            return np.where(mean < 0, -1.0, 1.0) * np.sqrt(np.maximum(msq, 0.0))
        table = np.asarray(p, dtype=float)
        if table.size == n + 1:
            table = table[:-1]
        if table.size != n:
            raise InvalidParameter(f"custom theta table has {table.size} entries, grid has {n} cells")
        return table

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": list(self.params), "T": self.T}


def _pow_cell(a, b, e):
    """Mean of ``s**e`` over ``[a, b]`` (e > -1)."""
    return (b ** (1.0 + e) - a ** (1.0 + e)) / ((1.0 + e) * (b - a))


@dataclass(frozen=True)
class KernelSample:
    phi_T: float
    log_phi_T: float
    ito_integral: float
    quad_term: float


@dataclass(frozen=True)
class KernelBatch:
    """Column-wise view of a list of :class:`KernelSample`."""

    phi_T: np.ndarray
    log_phi_T: np.ndarray
    ito_integral: np.ndarray
    quad_term: np.ndarray

    def __len__(self):
        return self.phi_T.size

    def samples(self) -> list[KernelSample]:
        return [
            KernelSample(float(a), float(b), float(c), float(d))
            for a, b, c, d in zip(self.phi_T, self.log_phi_T, self.ito_integral, self.quad_term)
        ]


def as_batch(samples) -> KernelBatch:
    if isinstance(samples, KernelBatch):
        return samples
    samples = list(samples)
    if not samples:
        raise InvalidParameter("no kernel samples")
    cols = np.array([[s.phi_T, s.log_phi_T, s.ito_integral, s.quad_term] for s in samples], dtype=float)
    return KernelBatch(cols[:, 0], cols[:, 1], cols[:, 2], cols[:, 3])


def _check_integrable(theta: ThetaSpec, n: int):
    if theta.kind != "custom" or n < 4:
        return
    v = theta.cell_values(n)
    q_full = float(np.sum(v * v)) / n
    q_half = float(np.sum(v[: n // 2 * 2].reshape(-1, 2)[:, 0] ** 2)) * 2.0 / n
    if q_half > 0 and q_full > 2.0 * q_half + 1e-12:
        raise NonIntegrableTheta("discrete int theta^2 grows under refinement")


def sample_kernel_array(theta: ThetaSpec, times, W) -> KernelBatch:
    """Kernel values for Wiener paths stacked row-wise in ``W``."""
    W = np.atleast_2d(np.asarray(W, dtype=float))
    h = uniform_step(times)
    n = W.shape[1] - 1
    if abs((times[-1] - times[0]) - theta.T) > 1e-9 * max(1.0, theta.T):
        raise InvalidParameter("path horizon does not match theta.T")
    _check_integrable(theta, n)
    th = theta.cell_values(n)
    dW = np.diff(W, axis=1)
    ito = dW @ th
    quad = 0.5 * h * math.fsum((th * th).tolist())
    quad_arr = np.full(W.shape[0], quad)
    logphi = ito - quad_arr
    return KernelBatch(np.exp(logphi), logphi, ito, quad_arr)


def sample_kernel(theta: ThetaSpec, wiener_paths) -> list[KernelSample]:
    """Pricing kernel per Wiener path.

    Parameters
    ----------
    theta : ThetaSpec
    wiener_paths : list of SamplePath
        Common uniform grid on ``[0, theta.T]``.
    """
    times, W = as_array(wiener_paths)
    return sample_kernel_array(theta, times, W).samples()


# ---------------------------------------------------------------------------
# relative entropy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float
    stable: bool = True


def mc_mean(x) -> tuple[float, float]:
    """Mean and standard error with order-independent summation."""
    x = np.asarray(x, dtype=float)
    n = x.size
    m = math.fsum(x.tolist()) / n
    var = math.fsum(((x - m) ** 2).tolist()) / max(n - 1, 1)
    return m, math.sqrt(var / n)


def batch_stable(x, n_batches: int = 10) -> bool:
    """Cauchy-type stabilisation test over consecutive batches.

    Fails when the spread of batch means exceeds both 20% of the pooled
    mean and six standard errors of a single batch mean, or when a single
    sample carries more than half of the total absolute mass.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        return False
    if x.size < 2 * n_batches:
        return True
    mass = math.fsum(np.abs(x).tolist())
    if mass > 0 and np.max(np.abs(x)) > 0.5 * mass:
        return False
    parts = np.array_split(x, n_batches)
    means = np.array([math.fsum(p.tolist()) / p.size for p in parts])
    pooled, se = mc_mean(x)
    batch_se = se * math.sqrt(n_batches)
    return bool(np.ptp(means) <= max(0.2 * abs(pooled), 6.0 * batch_se))


def relative_entropy(samples, direction: str = "P*||P", strict: bool = False) -> Estimate:
    """Monte Carlo relative entropy between the kernel measure and the base.

    ``direction="P*||P"`` estimates ``E(phi log phi)``; ``"P||P*"`` estimates
    ``E(-log phi)``. With ``strict=True`` an unstable estimate raises
    :class:`EntropyDivergence` instead of returning ``stable=False``.
    """
    b = as_batch(samples)
    if direction in ("P*||P", "P*|P"):
        x = b.phi_T * b.log_phi_T
    elif direction in ("P||P*", "P|P*"):
        x = -b.log_phi_T
    else:
        raise InvalidParameter(f"unknown direction {direction!r}")
    m, se = mc_mean(x)
    ok = batch_stable(x)
    if strict and not ok:
        raise EntropyDivergence("relative entropy estimate does not stabilise across batches")
    return Estimate(m, se, ok)


def variance_blowup_bound(H: float, t: float, eps: float) -> float:
    """Lower bound on the prelimit variance that diverges as ``eps -> 0``."""
    if not 0.5 < H < 1.0:
        raise InvalidParameter("H must lie in (1/2, 1)")
    if not eps > 0:
        raise InvalidParameter("eps must be positive")
    if t < 0:
        raise InvalidParameter("t must be non-negative")
    return eps ** (1.0 - 2.0 * H) * t / (2.0 - 2.0 * H) * (eps ** (2.0 * H - 2.0) - (t + eps) ** (2.0 * H - 2.0))
