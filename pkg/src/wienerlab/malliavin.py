"""Clark-Ocone integrands for smooth functionals of the terminal Wiener value.

For ``F = f(W(T))`` the Malliavin derivative is ``D_t F = f'(W(T))`` and the
representation integrand is ``E(f'(W(T)) | F_t)``. Given ``W(t) = x`` the
terminal value is ``N(x, T - t)``, so the conditional mean is a one-dimensional
Gaussian integral, evaluated with 64-node Gauss-Hermite quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParameter, QuadratureOverflow
from .paths import GridFunction, SamplePath

GH_NODES = 64
_X, _W = np.polynomial.hermite_e.hermegauss(GH_NODES)
_W = _W / math.sqrt(2.0 * math.pi)

IntegrandPath = GridFunction


@dataclass(frozen=True)
class TerminalFunctional:
    """``F = f(W(T))`` for one of the supported kinds.

    Parameters
    ----------
    kind : {"linear", "square", "smooth_of_WT"}
    T : float
        Horizon; must match the last grid time of the paths used.
    f, fprime : callable, optional
        Required for ``smooth_of_WT``; vectorised over numpy arrays.
    """

    kind: str
    T: float = 1.0
    f: Optional[Callable] = None
    fprime: Optional[Callable] = None

    def __post_init__(self):
        if self.kind not in ("linear", "square", "smooth_of_WT"):
            raise InvalidParameter(f"unknown functional kind {self.kind!r}")
        if not self.T > 0:
            raise InvalidParameter("T must be positive")
        if self.kind == "smooth_of_WT" and (self.f is None or self.fprime is None):
            raise InvalidParameter("smooth_of_WT needs f and fprime")

    @classmethod
    def linear(cls, T=1.0):
        return cls("linear", T)

    @classmethod
    def square(cls, T=1.0):
        return cls("square", T)

    @classmethod
    def exp(cls, T=1.0):
        return cls("smooth_of_WT", T, np.exp, np.exp)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "linear":
            return x
        if self.kind == "square":
            return x * x
        return np.asarray(self.f(x), dtype=float)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "linear":
            return np.ones_like(x)
        if self.kind == "square":
            return 2.0 * x
        return np.asarray(self.fprime(x), dtype=float)


def gaussian_mean(fn, mean, var):
    """``E fn(mean + sqrt(var) Z)`` by Gauss-Hermite, vectorised over ``mean``."""
    mean = np.asarray(mean, dtype=float)
    var = np.asarray(var, dtype=float)
    sd = np.sqrt(np.maximum(var, 0.0))
    pts = mean[..., None] + sd[..., None] * _X
    with np.errstate(over="ignore", invalid="ignore"):
        vals = np.asarray(fn(pts), dtype=float)
        out = vals @ _W
    if not np.all(np.isfinite(out)):
        raise QuadratureOverflow("integrand overflowed the Gauss-Hermite rule")
    return out


def _check_path(F: TerminalFunctional, w: SamplePath):
    t = w.times
    if abs(t[0]) > 1e-12:
        raise InvalidParameter("Wiener path must start at t = 0")
    if abs(t[-1] - F.T) > 1e-9 * max(1.0, F.T):
        raise InvalidParameter("path horizon does not match the functional")


def clark_ocone_integrand(F: TerminalFunctional, w: SamplePath) -> IntegrandPath:
    """``E(D_t F | F_t)`` at every grid time of the Wiener path ``w``."""
    _check_path(F, w)
    x = np.asarray(w.values, dtype=float)
    if F.kind == "linear":
        vals = np.ones_like(x)
    elif F.kind == "square":
        vals = 2.0 * x
    else:
        rem = F.T - w.times
        rem[-1] = 0.0
        vals = gaussian_mean(F.derivative, x, rem)
    return IntegrandPath(w.times, vals)


def expectation(F: TerminalFunctional) -> float:
    """``E F`` from the same quadrature rule at ``t = 0``."""
    return float(gaussian_mean(F.value, 0.0, F.T))


def ito_sum(integrand, w_values) -> float:
    """Left-point sum ``sum_k theta_k (W_{k+1} - W_k)``.

    Written in summation-by-parts form and accumulated with ``math.fsum`` so
    that a constant integrand reproduces ``theta (W_n - W_0)`` exactly.
    """
    th = np.asarray(integrand, dtype=float)
    w = np.asarray(w_values, dtype=float)
    n = w.size - 1
    terms = [th[n - 1] * w[n], -th[0] * w[0]]
    terms.extend((-(th[1:n] - th[: n - 1]) * w[1:n]).tolist())
    return math.fsum(terms)


def verify_representation(F: TerminalFunctional, w: SamplePath, integrand: IntegrandPath) -> float:
    """``|F(w) - E F - sum_k theta(t_k) dW_k|`` for one path."""
    _check_path(F, w)
    if integrand.times.shape != w.times.shape or not np.allclose(integrand.times, w.times):
        raise InvalidParameter("integrand and path must share a grid")
    fw = float(F.value(w.values[-1]))
    return abs(math.fsum([fw, -expectation(F), -ito_sum(integrand.values, w.values)]))
