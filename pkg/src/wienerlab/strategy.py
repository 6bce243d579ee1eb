"""Inductive construction of an integrand replicating a target as a pathwise integral.

On ``[t_n, t_{n+1}]`` the integrand is ``sigma g'(G_t - G_{t_n}) * sign`` with
``g(x) = sqrt(x^2 + nu^2) - nu``, stopped the first time the accumulated
integral reaches the required jump. Along the piecewise-linear interpolant of
``G`` the chain rule holds exactly, so the running integral is
``V_t = V_{t_n} + sign * sigma * g(G_t - G_{t_n})`` and the hitting time is
found inside the crossing cell.

If the previous interval ended short of its target, the current interval is
spent on recovering the shortfall: the same primitive is re-run on dyadic
sub-blocks ``[t_n + (1 - 2^-j) Delta_n, t_n + (1 - 2^-(j+1)) Delta_n]`` with
scale ``sigma_n 2^j`` until the gap is closed or the interval ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import frac_calc
from .errors import ConditionAViolation, InvalidParameter
from .paths import GridFunction, SamplePath, uniform_step

SHORTFALL_TOL = 1e-9


# ---------------------------------------------------------------------------
# Hoelder bookkeeping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HolderBudget:
    """Hoelder orders entering the admissibility inequality.

    ``rho0`` is the threshold ``(1+H2)(H1-H2)/(H2+1-2H1)`` of the companion
    condition; its denominator differs from that of ``H3`` whenever
    ``H1 != H2``. Both are reported as defined.
    """

    lam: float
    lemma_case: str
    theta_order: float
    H3: float
    rho0: float
    admissible: bool


def holder_budget(lam: float, lemma_case: str, H1: float, H2: float, delta: float | None = None) -> HolderBudget:
    """Admissibility of a Hoelder order ``lam`` for the optimal profile.

    Parameters
    ----------
    lam : float
        Hoelder order of the inverse marginal utility.
    lemma_case : {"i", "ii", "iii"}
        Integrability class of the kernel integrand.
    H1, H2 : float
        Exponents of the two-sided variance bounds, ``0 < 2 H1 - 1 < H2 <= H1``.
    delta : float
        Required for cases ``ii`` and ``iii``.
    """
    if not 0.0 < 2.0 * H1 - 1.0 < H2 <= H1 <= 1.0:
        raise ConditionAViolation(f"need 0 < 2 H1 - 1 < H2 <= H1, got H1={H1}, H2={H2}")
    if not lam > 0:
        raise InvalidParameter("lambda must be positive")
    if lemma_case == "i":
        order = 0.5
    elif lemma_case in ("ii", "iii"):
        if delta is None or not delta > 0:
            raise InvalidParameter("delta > 0 required for this case")
        order = delta / (4.0 + 2.0 * delta) if lemma_case == "ii" else delta / (8.0 + 2.0 * delta)
    else:
        raise InvalidParameter(f"unknown case {lemma_case!r}")
    H3 = (1.0 + H2) * (H1 - H2) / (H1 + 1.0 - 2.0 * H2)
    rho0 = (1.0 + H2) * (H1 - H2) / (H2 + 1.0 - 2.0 * H1)
    return HolderBudget(float(lam), lemma_case, order, H3, rho0, bool(lam * order > H3))


# ---------------------------------------------------------------------------
# schedule and state
# ---------------------------------------------------------------------------


def g_fn(x, nu):
    x = np.asarray(x, dtype=float)
    return np.hypot(x, nu) - nu


def g_prime(x, nu):
    x = np.asarray(x, dtype=float)
    return x / np.hypot(x, nu)


@dataclass(frozen=True)
class StrategySchedule:
    """Refinement times and tuning sequences for levels ``1..n_max``.

    ``refine_times`` holds ``t_1 .. t_{n_max+1}``; ``sigma`` and ``nu`` hold
    ``sigma_1 .. sigma_{n_max}`` and ``nu_1 .. nu_{n_max}``.
    """

    refine_times: tuple
    sigma: tuple
    nu: tuple

    def __post_init__(self):
        t = np.asarray(self.refine_times, dtype=float)
        s = np.asarray(self.sigma, dtype=float)
        v = np.asarray(self.nu, dtype=float)
        if t.size < 2 or s.size != t.size - 1 or v.size != s.size:
            raise InvalidParameter("need n_max+1 times and n_max sigmas and nus")
        if not (np.all(np.diff(t) > 0) and t[0] > 0 and t[-1] < 1.0):
            raise InvalidParameter("refine times must increase strictly inside (0, 1)")
        if not (np.all(s > 0) and np.all(np.diff(s) >= 0)):
            raise InvalidParameter("sigma must be positive and non-decreasing")
        if not np.all(v > 0):
            raise InvalidParameter("nu must be positive")

    @property
    def n_max(self) -> int:
        return len(self.sigma)

    @classmethod
    def default(cls, n_max: int = 8):
        n = np.arange(1, n_max + 2)
        t = 1.0 - 2.0 ** (-n)
        k = np.arange(1, n_max + 1)
        return cls(tuple(t), tuple(2.0 ** (k / 2.0)), tuple(4.0 ** (-k.astype(float))))

    def to_dict(self) -> dict:
        return {"refine_times": list(self.refine_times), "sigma": list(self.sigma), "nu": list(self.nu)}


@dataclass(frozen=True)
class Segment:
    """One run of the primitive: ``psi = sign sigma g'(G - anchor)`` on ``[t_start, tau]``."""

    level: int
    sigma: float
    nu: float
    sign: float
    anchor: float
    t_start: float
    tau: float
    target: float
    hit: bool
    gained: float


@dataclass
class ReplicationState:
    xi: np.ndarray
    delta: np.ndarray
    Delta: np.ndarray
    V: np.ndarray
    tau: np.ndarray
    case_taken: list
    never_hit: list
    segments: list = field(default_factory=list)
    V_at: np.ndarray = None
    level_index: np.ndarray = None

    def to_dict(self) -> dict:
        levels = []
        for i, case in enumerate(self.case_taken):
            n = i + 1
            levels.append(
                {
                    "level": n,
                    "case": case,
                    "tau": float(self.tau[i]),
                    "V": float(self.V_at[n]),
                    "xi": float(self.xi[n]),
                    "delta": float(self.delta[i]),
                    "never_hit": bool(self.never_hit[i]),
                    "phi1_residual": float(abs(self.V_at[n + 1] - self.xi[n])),
                }
            )
        return {"levels": levels}


def _snap(times, t):
    h = uniform_step(times)
    i = int(round((t - times[0]) / h))
    return min(max(i, 0), times.size - 1)


def _primitive(x, times, b0, b1, sigma, nu, sign, target, V, psi, level, V0):
    """Run the stopped integrand on nodes ``b0..b1``; fills ``V`` and ``psi``.

    Returns the :class:`Segment` record. ``target`` >= 0 is the amount the
    integral must reach.
    """
    h = times[1] - times[0]
    anchor = x[b0]
    t_start = times[b0]
    if target <= 0.0 or sign == 0.0:
        V[b0 : b1 + 1] = V0
        psi[b0:b1] = 0.0
        return Segment(level, sigma, nu, sign, anchor, t_start, t_start, max(target, 0.0), True, 0.0)
    # sigma g(y) >= target  <=>  |y| >= ystar
    c = target / sigma + nu
    ystar = math.sqrt(max(c * c - nu * nu, 0.0))
    y = x[b0 : b1 + 1] - anchor
    over = np.nonzero(np.abs(y[1:]) >= ystar)[0]
    if over.size:
        k = int(over[0])  # crossing in cell [b0+k, b0+k+1]
        ya, yb = y[k], y[k + 1]
        edge = ystar if yb > 0 else -ystar
        frac = (edge - ya) / (yb - ya) if yb != ya else 1.0
        frac = min(max(frac, 0.0), 1.0)
        tau = times[b0 + k] + frac * h
        V[b0 : b0 + k + 1] = V0 + sign * sigma * g_fn(y[: k + 1], nu)
        V[b0 + k + 1 : b1 + 1] = V0 + sign * target
        psi[b0 : b0 + k + 1] = sign * sigma * g_prime(y[: k + 1], nu)
        psi[b0 + k + 1 : b1] = 0.0
        return Segment(level, sigma, nu, sign, anchor, t_start, float(tau), target, True, target)
    V[b0 : b1 + 1] = V0 + sign * sigma * g_fn(y, nu)
    psi[b0:b1] = sign * sigma * g_prime(y[:-1], nu)
    gained = float(sigma * g_fn(y[-1], nu))
    return Segment(level, sigma, nu, sign, anchor, t_start, float(times[b1]), target, False, gained)


def construct_strategy(G: SamplePath, target: SamplePath, sched: StrategySchedule):
    """Build the replicating integrand for ``target`` against ``G``.

    Parameters
    ----------
    G : SamplePath
        Integrator on a uniform grid over ``[0, 1]``.
    target : SamplePath
        Adapted target ``Z`` on the same grid.
    sched : StrategySchedule
        Refinement times are snapped to the nearest grid node; snapping must
        keep them distinct.

    Returns
    -------
    psi : GridFunction
        Integrand at the grid nodes (left-point value on each cell; the last
        node is 0).
    state : ReplicationState
    """
    times = G.times
    if target.times.shape != times.shape or not np.allclose(target.times, times):
        raise InvalidParameter("G and target must share a grid")
    if abs(times[0]) > 1e-12 or abs(times[-1] - 1.0) > 1e-9:
        raise InvalidParameter("the construction runs on [0, 1]")
    x = np.asarray(G.values, dtype=float)
    z = np.asarray(target.values, dtype=float)
    idx = np.array([_snap(times, t) for t in sched.refine_times])
    if np.any(np.diff(idx) <= 0):
        raise InvalidParameter("grid too coarse for the refinement schedule")
    n_max = sched.n_max
    N = times.size - 1
    V = np.zeros(N + 1)
    psi = np.zeros(N + 1)
    # xi_0 = 0, xi_n = Z(t_n)
    xi = np.concatenate(([0.0], z[idx]))
    V_at = np.zeros(n_max + 2)  # V at t_1 .. t_{n_max+1} stored at positions 1..
    tau = np.zeros(n_max)
    delta = np.abs(np.diff(xi))[:n_max]
    Delta = np.diff(times[idx])
    cases, misses, segments = [], [], []
    for n in range(1, n_max + 1):
        i0, i1 = int(idx[n - 1]), int(idx[n])
        V0 = V[i0]
        V_at[n] = V0
        sigma, nu = float(sched.sigma[n - 1]), float(sched.nu[n - 1])
        shortfall = V0 - xi[n - 1]
        if n >= 2 and abs(shortfall) > SHORTFALL_TOL:
            # recover v_n = V - xi_n by moving against its sign
            cases.append("A")
            v = V0 - xi[n]
            remaining = abs(v)
            sign = -math.copysign(1.0, v)
            j = 0
            b0 = i0
            Vb = V0
            hit = remaining <= 0.0
            last_tau = times[i0]
            while not hit and b0 < i1:
                frac = 1.0 - 2.0 ** (-(j + 1))
                b1 = i1 if frac >= 1.0 else max(b0 + 1, _snap(times, times[i0] + frac * (times[i1] - times[i0])))
                if b1 >= i1 or (i1 - b1) < 1:
                    b1 = i1
                seg = _primitive(x, times, b0, b1, sigma * 2.0**j, nu, sign, remaining, V, psi, n, Vb)
                segments.append(seg)
                last_tau = seg.tau
                if seg.hit:
                    hit = True
                    break
                remaining -= seg.gained
                Vb = V[b1]
                if remaining <= 0.0:
                    hit = True
                    break
                b0 = b1
                j += 1
            if hit:
                V[i1] = xi[n]
            tau[n - 1] = last_tau
            misses.append(not hit)
        else:
            cases.append("B")
            d = xi[n] - xi[n - 1]
            sign = math.copysign(1.0, d) if d != 0 else 0.0
            seg = _primitive(x, times, i0, i1, sigma, nu, sign, abs(d), V, psi, n, V0)
            segments.append(seg)
            if seg.hit and d != 0:
                V[i1] = xi[n - 1] + d
            tau[n - 1] = seg.tau
            misses.append(not seg.hit)
    last = int(idx[-1])
    V[last:] = V[last]
    psi[last:] = 0.0
    V_at[n_max + 1] = V[last]
    state = ReplicationState(xi, delta, Delta, V, tau, cases, misses, segments, V_at, idx)
    return GridFunction(times, psi), state


def replication_error(state: ReplicationState, target_final: float, n: int) -> tuple[float, float]:
    """``(|V(t_n) - Z(t_{n-1})|, |V(t_n) - target_final|)`` for level ``n >= 1``."""
    if not 1 <= n <= len(state.case_taken) + 1:
        raise InvalidParameter("level out of range")
    v = state.V_at[n]
    return float(abs(v - state.xi[n - 1])), float(abs(v - target_final))


def norm_decay_check(psi: GridFunction, sched: StrategySchedule, alpha: float, levels=None) -> list[float]:
    """``||psi||_{alpha, [t_n, 1]}`` for ``n = 1..n_max`` (or the listed ``levels``)."""
    if not 0.0 < alpha < 0.5:
        raise InvalidParameter("alpha must lie in (0, 1/2)")
    times = psi.times
    out = []
    chosen = range(1, sched.n_max + 1) if levels is None else levels
    for n in chosen:
        t = sched.refine_times[n - 1]
        start = times[_snap(times, t)]
        out.append(frac_calc.holder_norm(psi, alpha, float(times[-1]), start=float(start)))
    return out


def chain_rule_check(G: SamplePath, seg: Segment, substeps: int = 256, min_points: int = 2**15) -> tuple[float, float]:
    """Refined Riemann-Stieltjes sum of a segment against its closed form.

    Left-point sums of ``sign sigma g'(G - anchor) dG`` are taken along the
    linear interpolant of ``G`` over ``[t_start, tau]``, with every grid cell
    split into at least ``substeps`` pieces and at least ``min_points``
    pieces over the whole segment. Returns ``(sum, closed_form)``.
    """
    t, x = G.times, np.asarray(G.values, dtype=float)
    if seg.tau <= seg.t_start:
        return 0.0, 0.0
    h = t[1] - t[0]
    span = (seg.tau - seg.t_start) / h
    m = int(max(substeps, math.ceil(min_points / span)))
    m = min(m, 2**22)
    k0 = int(round((seg.t_start - t[0]) / h))
    k1 = int(math.ceil((seg.tau - t[0]) / h - 1e-12))
    cells = np.arange(k0, max(k1, k0 + 1))
    u = (np.arange(m) / m)[None, :]
    s = (t[cells][:, None] + u * h).ravel()
    s = np.append(s[s < seg.tau], seg.tau)
    y = np.interp(s, t, x) - seg.anchor
    rs = seg.sign * seg.sigma * math.fsum((g_prime(y[:-1], seg.nu) * np.diff(y)).tolist())
    closed = seg.sign * seg.sigma * float(g_fn(y[-1], seg.nu))
    return rs, closed


def integrand_path(G: SamplePath, state: ReplicationState, substeps: int = 1) -> GridFunction:
    """Integrand sampled on the grid of ``G`` refined ``substeps`` times.

    Nodes inside a segment's ``[t_start, tau)`` carry
    ``sign sigma g'(G - anchor)`` evaluated on the linear interpolant;
    all other nodes carry 0. With ``substeps=1`` this matches the ``psi``
    returned by :func:`construct_strategy` except at cells where the hitting
    time falls strictly inside the first cell of a segment.
    """
    t, x = G.times, np.asarray(G.values, dtype=float)
    n = t.size - 1
    fine = np.linspace(t[0], t[-1], n * int(substeps) + 1)
    gv = np.interp(fine, t, x)
    out = np.zeros_like(fine)
    for seg in state.segments:
        if seg.tau <= seg.t_start:
            continue
        mask = (fine >= seg.t_start - 1e-12) & (fine < seg.tau)
        out[mask] = seg.sign * seg.sigma * g_prime(gv[mask] - seg.anchor, seg.nu)
    return GridFunction(fine, out)
