"""Discrete kernels of the fBm <-> Wiener transforms for H in (1/2, 1).

With q = H - 1/2 and h = T/n the forward map is ``B(t_k) = sum_j M[k, j] dW_j``
and the inverse map is ``W(t_k) = sum_j N[k, j] dB_j`` (rows k = 1..n).

``M[k, j]`` is the root-mean-square of the forward kernel over cell j, which
keeps ``sum_j M[k, j]**2 h`` equal to the exact variance ``t_k**(2H)``.
``N[k, j]`` is the plain cell average of the inverse kernel. Both kernels are
homogeneous, so unit-spacing matrices are cached and rescaled by ``h**(+-q)``.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import InvalidParameter

_CELL_NODES = 8
_INNER_NODES = 16


def c_h(H: float) -> float:
    """Normalising constant of the weighted fractional operator."""
    if not 0.0 < H < 1.0:
        raise InvalidParameter("H must lie in (0, 1)")
    return math.sqrt(2.0 * H * math.gamma(H + 0.5) * math.gamma(1.5 - H) / math.gamma(2.0 - 2.0 * H))


def check_hurst_half(H: float) -> float:
    H = float(H)
    if not 0.5 <= H < 1.0:
        raise InvalidParameter(f"H must lie in [1/2, 1) for the Volterra transform, got {H}")
    return H


@lru_cache(maxsize=16)
def _unit_matrix(n: int, q: float, kind: int, power: int) -> np.ndarray:
    cx, cw = np.polynomial.legendre.leggauss(_CELL_NODES)
    xs, ws = np.polynomial.legendre.leggauss(_INNER_NODES)
    m = kernels.volterra_matrix(int(n), float(q), int(kind), int(power), cx, cw, xs, ws)
    m.flags.writeable = False
    return m


def forward_matrix(H: float, n: int, T: float = 1.0) -> np.ndarray:
    """Lower-triangular ``M`` with ``B(t_k) = sum_j M[k-1, j] dW_j``."""
    H = check_hurst_half(H)
    if H == 0.5:
        return np.tril(np.ones((n, n)))
    q = H - 0.5
    h = T / n
    unit = _unit_matrix(n, q, 0, 2)
    return np.sqrt(unit) * (c_h(H) / math.gamma(H + 0.5) * h**q)


def inverse_matrix(H: float, n: int, T: float = 1.0) -> np.ndarray:
    """Lower-triangular ``N`` with ``W(t_k) = sum_j N[k-1, j] dB_j``."""
    H = check_hurst_half(H)
    if H == 0.5:
        return np.tril(np.ones((n, n)))
    q = H - 0.5
    h = T / n
    unit = _unit_matrix(n, q, 1, 1)
    return unit * (h ** (-q) / (c_h(H) * math.gamma(1.0 - q)))


def apply_lower(mat: np.ndarray, increments: np.ndarray) -> np.ndarray:
    """Path values (with a leading zero) from increments, row-wise."""
    inc = np.atleast_2d(increments)
    out = np.zeros((inc.shape[0], inc.shape[1] + 1))
    out[:, 1:] = inc @ mat.T
    return out
