"""Optimal terminal profiles for exponential, power and log utility.

Everything is computed on a fixed Monte Carlo sample of the pricing kernel
(sample-average approximation): expectations are sample means, so budget
residuals and optimality certificates are deterministic given the sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .errors import InvalidParameter, NoBracket
from .pricing import Estimate, as_batch, batch_stable, mc_mean, relative_entropy

X_FLOOR = 1e-10


@dataclass(frozen=True)
class UtilitySpec:
    """One of ``exponential(beta)``, ``power(gamma)``, ``log``.

    Exponential utility is ``u(x) = 1 - exp(-beta x)`` on the real line; the
    other two live on ``(0, inf)`` with ``pi1 = 0`` and ``pi2 = inf``.
    """

    kind: str
    beta: float = 1.0
    gamma: float = 0.5

    def __post_init__(self):
        if self.kind not in ("exponential", "power", "log"):
            raise InvalidParameter(f"unknown utility {self.kind!r}")
        if self.kind == "exponential" and not self.beta > 0:
            raise InvalidParameter("beta must be positive")
        if self.kind == "power" and not 0.0 < self.gamma < 1.0:
            raise InvalidParameter("gamma must lie in (0, 1)")

    @classmethod
    def exponential(cls, beta):
        return cls("exponential", beta=float(beta))

    @classmethod
    def power(cls, gamma):
        return cls("power", gamma=float(gamma))

    @classmethod
    def log(cls):
        return cls("log")

    @property
    def lower(self) -> float:
        return -math.inf if self.kind == "exponential" else 0.0

    def u(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "exponential":
            return 1.0 - np.exp(-self.beta * x)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "power":
                return np.where(x >= 0, np.abs(x) ** self.gamma / self.gamma, -np.inf)
            return np.where(x > 0, np.log(np.abs(x)), -np.inf)

    def marginal(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "exponential":
            return self.beta * np.exp(-self.beta * x)
        if self.kind == "power":
            return x ** (self.gamma - 1.0)
        return 1.0 / x

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "exponential":
            d["beta"] = self.beta
        if self.kind == "power":
            d["gamma"] = self.gamma
        return d


def inverse_marginal(u: UtilitySpec, y):
    """``I(y) = (u')^{-1}(y)``, extended by ``+inf`` at ``y <= 0`` and ``0`` at ``y = inf``
    on the half-line domains."""
    y = np.asarray(y, dtype=float)
    if u.kind == "exponential":
        if np.any(y <= 0):
            raise InvalidParameter("exponential inverse marginal needs y > 0")
        out = -np.log(y / u.beta) / u.beta
    else:
        p = 1.0 / (1.0 - u.gamma) if u.kind == "power" else 1.0
        with np.errstate(divide="ignore"):
            out = np.where(y <= 0.0, np.inf, np.where(np.isinf(y), 0.0, np.abs(y) ** (-p)))
    return out[()] if out.ndim == 0 else out


@dataclass
class OptimalProfile:
    utility: UtilitySpec
    w: float
    x_star: np.ndarray
    c_star: float
    expected_utility: float
    se: float
    closed_form: float
    budget_residual: float
    budget_se: float
    entropy: Estimate | None = None
    d: Estimate | None = None
    flags: list = field(default_factory=list)

    def report(self) -> dict:
        out = {
            "utility": self.utility.kind,
            "params": self.utility.to_dict(),
            "w": self.w,
            "c_star": self.c_star,
            "expected_utility": self.expected_utility,
            "SE": self.se,
            "closed_form": self.closed_form,
            "budget_residual": self.budget_residual,
            "budget_SE": self.budget_se,
            "entropy": None if self.entropy is None else self.entropy.value,
            "entropy_SE": None if self.entropy is None else self.entropy.se,
            "flags": list(self.flags),
        }
        if self.d is not None:
            out["d"] = self.d.value
            out["d_SE"] = self.d.se
        return out


def _budget(phi, x, w):
    m, se = mc_mean(phi * x)
    return abs(m - w), se


def optimal_profile_exponential(beta: float, w: float, kernel) -> OptimalProfile:
    """``X* = -(log phi)/beta + w + H(P*|P)/beta`` with the sample entropy."""
    u = UtilitySpec.exponential(beta)
    b = as_batch(kernel)
    ent = relative_entropy(b, "P*||P")
    x = -b.log_phi_T / beta + w + ent.value / beta
    c = beta * math.exp(-beta * w - ent.value)
    eu, se = mc_mean(u.u(x))
    res, bse = _budget(b.phi_T, x, w)
    flags = [] if ent.stable else ["entropy-divergence"]
    closed = 1.0 - math.exp(-beta * w - ent.value)
    return OptimalProfile(u, float(w), x, c, eu, se, closed, res, bse, entropy=ent, flags=flags)


def optimal_profile_power(gamma: float, w: float, kernel) -> OptimalProfile:
    """``X* = (w/d) phi^{-1/(1-gamma)}`` with ``d = E phi^{-gamma/(1-gamma)}``."""
    u = UtilitySpec.power(gamma)
    if not w > 0:
        raise InvalidParameter("initial capital must be positive for power utility")
    b = as_batch(kernel)
    z = np.exp(-gamma / (1.0 - gamma) * b.log_phi_T)
    dm, dse = mc_mean(z)
    d = Estimate(dm, dse, batch_stable(z))
    x = (w / dm) * np.exp(-b.log_phi_T / (1.0 - gamma))
    c = (w / dm) ** (-(1.0 - gamma))
    eu, se = mc_mean(u.u(x))
    res, bse = _budget(b.phi_T, x, w)
    closed = w**gamma * dm ** (1.0 - gamma) / gamma
    flags = [] if d.stable else ["d-divergence"]
    return OptimalProfile(u, float(w), x, c, eu, se, closed, res, bse, d=d, flags=flags)


def optimal_profile_log(w: float, kernel) -> OptimalProfile:
    """``X* = w / phi``; the budget holds identically."""
    u = UtilitySpec.log()
    if not w > 0:
        raise InvalidParameter("initial capital must be positive for log utility")
    b = as_batch(kernel)
    ent = relative_entropy(b, "P||P*")
    x = w / b.phi_T
    eu, se = mc_mean(math.log(w) - b.log_phi_T)
    _, bse = _budget(b.phi_T, x, w)
    flags = [] if ent.stable else ["entropy-divergence"]
    return OptimalProfile(u, float(w), x, 1.0 / w, eu, se, math.log(w) + ent.value, 0.0, bse, entropy=ent, flags=flags)


def optimal_profile(u: UtilitySpec, w: float, kernel) -> OptimalProfile:
    if u.kind == "exponential":
        return optimal_profile_exponential(u.beta, w, kernel)
    if u.kind == "power":
        return optimal_profile_power(u.gamma, w, kernel)
    return optimal_profile_log(w, kernel)


def solve_budget_multiplier(u: UtilitySpec, w: float, kernel, max_iter: int = 200) -> float:
    """Root ``c`` of ``mean(phi I(c phi)) = w`` on the sample.

    The map is strictly decreasing in ``c``; a bracket is found by doubling
    ``log c`` and refined by bisection in ``log c``.
    """
    b = as_batch(kernel)
    phi = b.phi_T
    tol = 1e-8 * max(1.0, abs(w))

    def excess(lc):
        with np.errstate(over="ignore"):
            x = inverse_marginal(u, np.exp(lc) * phi)
        return math.fsum((phi * x).tolist()) / phi.size - w

    lo, hi = -1.0, 1.0
    step = 1.0
    while excess(lo) <= 0:
        step *= 2.0
        lo -= step
        if lo < -1e4:
            raise NoBracket(f"budget {w} is not attainable on this sample")
    step = 1.0
    while excess(hi) >= 0:
        step *= 2.0
        hi += step
        if hi > 1e4:
            raise NoBracket(f"budget {w} is not attainable on this sample")
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        e = excess(mid)
        if abs(e) < tol:
            break
        if e > 0:
            lo = mid
        else:
            hi = mid
    return math.exp(mid)


@dataclass(frozen=True)
class ProbeResult:
    worst_gap: float
    se: float
    n_used: int
    n_discarded: int


def optimality_probe(u: UtilitySpec, w: float, kernel, x_star, n_probes: int = 100, seed: int = 0, scale: float = 0.2) -> ProbeResult:
    """Compare ``x_star`` with budget-preserving random perturbations.

    Each perturbation mixes a random function of ``log phi`` with independent
    noise, is projected so that ``mean(phi X)`` is unchanged, and (for the
    half-line utilities) is clamped above ``1e-10`` and re-projected once.
    Returns the smallest observed ``mean u(x_star) - mean u(X)`` with the
    standard error of that paired difference.
    """
    b = as_batch(kernel)
    phi = b.phi_T
    x_star = np.asarray(x_star, dtype=float)
    if x_star.shape != phi.shape:
        raise InvalidParameter("x_star and kernel sample sizes differ")
    target = math.fsum((phi * x_star).tolist()) / phi.size
    phi2 = math.fsum((phi * phi).tolist()) / phi.size
    L = b.log_phi_T
    Lz = (L - L.mean()) / (L.std() if L.std() > 0 else 1.0)
    half_line = u.kind != "exponential"
    level = np.abs(x_star) if half_line else np.full_like(x_star, max(float(np.std(x_star)), 1.0))
    base = u.u(x_star)
    worst, worst_se = math.inf, 0.0
    used = discarded = 0
    for k in range(int(n_probes)):
        g = _rng.path_generator(seed, k, _rng.STREAM_PROBE)
        a = g.standard_normal(3)
        noise = g.standard_normal(phi.size)
        zeta = a[0] * Lz + a[1] * (Lz * Lz - 1.0) + a[2] * noise
        zeta /= max(float(np.max(np.abs(zeta))), 1e-300)
        eta = scale * g.uniform(0.05, 1.0) * level * zeta
        X = x_star + eta
        X = X - (math.fsum((phi * X).tolist()) / phi.size - target) / phi2 * phi
        if half_line and np.min(X) < X_FLOOR:
            X = np.maximum(X, X_FLOOR)
            X = X - (math.fsum((phi * X).tolist()) / phi.size - target) / phi2 * phi
            if np.min(X) < X_FLOOR:
                discarded += 1
                continue
        diff = base - u.u(X)
        m, se = mc_mean(diff)
        used += 1
        if m < worst:
            worst, worst_se = m, se
    if used == 0:
        return ProbeResult(0.0, 0.0, 0, discarded)
    return ProbeResult(float(worst), float(worst_se), used, discarded)
