"""Inner loops shared by the fractional-calculus and Volterra code.

Every kernel has an ``@njit`` implementation and a numpy implementation with
the same signature; the public name is bound to one of them by
:func:`wienerlab._accel.pick`. Grids are uniform with unit spacing here;
callers apply the ``h**power`` scaling.

Weights
-------
Fractional operators are discretised by product integration: the integrand
difference ``f(x) - f(u)`` is replaced by its piecewise-linear interpolant and
integrated exactly against the power kernel. For a node ``m`` cells away from
the evaluation point the hat function integrates to ``left[m] + right[m]``;
the node at the far end of the interval only has its ``left`` half.
"""

import numpy as np

from ._accel import njit, pick

# ---------------------------------------------------------------------------
# product-integration weights
# ---------------------------------------------------------------------------


def _power_diff(p, s):
    """(p + 1)**s - p**s for p >= 0, accurate for large p."""
    p = np.asarray(p, dtype=float)
    out = np.empty_like(p)
    zero = p == 0
    out[zero] = 1.0
    pp = p[~zero]
    out[~zero] = pp**s * np.expm1(s * np.log1p(1.0 / pp))
    return out


def hat_weights(order, n):
    """Hat-function integrals against ``rho**(-1-order)`` on unit cells.

    Returns ``(left, right)`` arrays of length ``n + 1``; entry ``m`` holds
    the integral of the left / right half of the hat centred at ``rho = m``.
    ``left[0]`` and ``right[0]`` are unused (set to 0).
    """
    b = float(order)
    m = np.arange(n + 1, dtype=float)
    left = np.zeros(n + 1)
    right = np.zeros(n + 1)
    if n == 0:
        return left, right
    mm = m[1:]
    # int_{m-1}^{m} rho^{-b} and int_{m-1}^{m} rho^{-1-b}
    a_prev = _power_diff(mm - 1.0, 1.0 - b) / (1.0 - b)
    b_prev = np.zeros_like(mm)
    inner = mm > 1
    p = mm[inner] - 1.0
    b_prev[inner] = -_power_diff(p, -b) / b
    left[1:] = a_prev - (mm - 1.0) * b_prev
    a_next = _power_diff(mm, 1.0 - b) / (1.0 - b)
    b_next = -_power_diff(mm, -b) / b
    right[1:] = (mm + 1.0) * b_next - a_next
    return left, right


def hat_weights_weak(order, n):
    """Hat-function integrals against ``rho**(-order)`` (weakly singular).

    Entry ``m`` of ``(left, right)`` as in :func:`hat_weights`, now including
    ``m = 0`` (whose left half is empty).
    """
    b = float(order)
    left = np.zeros(n + 1)
    right = np.zeros(n + 1)
    m = np.arange(n, dtype=float)  # right halves exist for m = 0..n-1
    a1 = _power_diff(m, 2.0 - b) / (2.0 - b)
    a0 = _power_diff(m, 1.0 - b) / (1.0 - b)
    right[:n] = (m + 1.0) * a0 - a1
    mm = np.arange(1, n + 1, dtype=float)
    a1p = _power_diff(mm - 1.0, 2.0 - b) / (2.0 - b)
    a0p = _power_diff(mm - 1.0, 1.0 - b) / (1.0 - b)
    left[1:] = a1p - (mm - 1.0) * a0p
    return left, right


# ---------------------------------------------------------------------------
# left-sided difference sums:  S_k = sum_m w(m) * op(f_k - f_{k-m})
# ---------------------------------------------------------------------------


@njit(cache=True)
def _left_sums_nb(f, left, right, use_abs):
    n = f.shape[0] - 1
    out = np.zeros(n + 1)
    for k in range(1, n + 1):
        fk = f[k]
        acc = 0.0
        for m in range(1, k):
            d = fk - f[k - m]
            if use_abs:
                d = abs(d)
            acc += (left[m] + right[m]) * d
        d = fk - f[0]
        if use_abs:
            d = abs(d)
        acc += left[k] * d
        out[k] = acc
    return out


def _left_sums_np(f, left, right, use_abs):
    n = f.shape[0] - 1
    out = np.zeros(n + 1)
    full = left + right
    for k in range(1, n + 1):
        d = f[k] - f[k - 1 : 0 : -1]
        e = f[k] - f[0]
        if use_abs:
            d = np.abs(d)
            e = abs(e)
        out[k] = np.dot(full[1:k], d) + left[k] * e
    return out


left_sums = pick(_left_sums_nb, _left_sums_np)


# ---------------------------------------------------------------------------
# Lambda_alpha: max over 0 <= j < k <= n of |D_{t_k-}^{order} g_{t_k-}(s_j)|
# ---------------------------------------------------------------------------


@njit(cache=True)
def _lambda_max_nb(g, left, right, order, scale_a, scale_b):
    # value(j, k) = scale_a * (g_j - g_k) / (k - j)**order
    #             + scale_b * (sum_{m<k-j} (l+r)_m (g_j - g_{j+m}) + l_{k-j} (g_j - g_k))
    n = g.shape[0] - 1
    best = 0.0
    for j in range(n):
        gj = g[j]
        cum = 0.0
        for k in range(j + 1, n + 1):
            m = k - j
            d = gj - g[k]
            val = scale_a * d / m**order + scale_b * (cum + left[m] * d)
            if abs(val) > best:
                best = abs(val)
            cum += (left[m] + right[m]) * d
    return best


def _lambda_max_np(g, left, right, order, scale_a, scale_b):
    n = g.shape[0] - 1
    full = left + right
    best = 0.0
    for j in range(n):
        m = np.arange(1, n - j + 1)
        d = g[j] - g[j + 1 :]
        cum = np.concatenate(([0.0], np.cumsum(full[1 : n - j] * d[:-1])))
        val = scale_a * d / m.astype(float) ** order + scale_b * (cum + left[m] * d)
        best = max(best, float(np.max(np.abs(val))))
    return best


lambda_max = pick(_lambda_max_nb, _lambda_max_np)


# ---------------------------------------------------------------------------
# Volterra kernels of the fBm <-> Wiener transforms (unit grid spacing)
# ---------------------------------------------------------------------------


@njit(cache=True, fastmath=True, error_model="numpy")
def _gl_interval(fn_kind, y, k, q, a, b, xs, ws):
    # Gauss-Legendre on [a, b] of the inner integrands
    #   kind 0:  (y + z**(1/q))**q            (forward kernel)
    #   kind 1:  (y + v**(1/(1-q)))**(q - 1)  (inverse kernel)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    acc = 0.0
    for i in range(xs.shape[0]):
        z = mid + half * xs[i]
        if fn_kind == 0:
            acc += ws[i] * (y + z ** (1.0 / q)) ** q
        else:
            acc += ws[i] * (y + z ** (1.0 / (1.0 - q))) ** (q - 1.0)
    return acc * half


@njit(cache=True, fastmath=True, error_model="numpy")
def _forward_inner(y, k, q, xs, ws):
    # int_0^{(k-y)^q} (y + z^{1/q})^q dz, split where z^{1/q} = y
    top = (k - y) ** q
    if top <= 0.0:
        return 0.0
    cut = y**q
    if cut <= 0.0 or cut >= top:
        return _gl_interval(0, y, k, q, 0.0, top, xs, ws)
    return _gl_interval(0, y, k, q, 0.0, cut, xs, ws) + _gl_interval(0, y, k, q, cut, top, xs, ws)


@njit(cache=True, fastmath=True, error_model="numpy")
def _inverse_inner(y, k, q, xs, ws):
    # int_y^k u^{q-1} (u-y)^{-q} du = (1/(1-q)) int_0^{(k-y)^{1-q}} (y + v^{1/(1-q)})^{q-1} dv
    # beyond v = y^{1-q} the integrand decays like 1/v: integrate in log v there
    top = (k - y) ** (1.0 - q)
    if top <= 0.0:
        return 0.0
    cut = y ** (1.0 - q)
    if cut <= 0.0 or cut >= top:
        acc = _gl_interval(1, y, k, q, 0.0, top, xs, ws)
    else:
        acc = _gl_interval(1, y, k, q, 0.0, cut, xs, ws)
        span = np.log(top / cut)
        tail = 0.0
        for i in range(xs.shape[0]):
            v = cut * np.exp(0.5 * span * (xs[i] + 1.0))
            tail += ws[i] * v * (y + v ** (1.0 / (1.0 - q))) ** (q - 1.0)
        acc += 0.5 * span * tail
    return acc / (1.0 - q)


@njit(cache=True, fastmath=True, error_model="numpy")
def _smooth_part(y, k, q, kind, power, xs, ws):
    # kernel = y^{-a} (k - y)^{-b} * F(y); F is bounded on the cell
    if kind == 0:
        # forward kernel: y^{-q} J(y), J ~ (k - y)^q near y = k
        r = k - y
        return (_forward_inner(y, k, q, xs, ws) / r**q) ** power
    # inverse kernel: y^{-q} (k - y)^{-q} [k^q - q (k - y)^q I*(y)]
    return k**q - q * (k - y) ** q * _inverse_inner(y, k, q, xs, ws)


@njit(cache=True, fastmath=True, error_model="numpy")
def _cell_mean(k, j, q, kind, power, cx, cw, xs, ws):
    """Mean over y in [j, j+1] of kernel(k, y)**power (unit spacing).

    Endpoint singularities are removed by power substitutions; the cell at
    y = 0 is further split geometrically because the inverse kernel also
    carries a logarithmic singularity there.
    """
    if kind == 0:
        a = power * q
        b = -power * q
    else:
        a = q
        b = q
    first = j == 0
    last = j == k - 1
    acc = 0.0
    lo = float(j)
    hi = float(j + 1)
    if first:
        c = 0.5 if last else 1.0
        pu = 1.0 / (1.0 - a)
        edges = (0.0, 2.0**-20, 2.0**-16, 2.0**-12, 2.0**-8, 2.0**-4, 1.0)
        part = 0.0
        for e in range(6):
            ea = edges[e]
            eb = edges[e + 1]
            for i in range(cx.shape[0]):
                u = ea + 0.5 * (eb - ea) * (cx[i] + 1.0)
                y = c * u**pu
                part += 0.5 * (eb - ea) * cw[i] * (k - y) ** (-b) * _smooth_part(y, k, q, kind, power, xs, ws)
        acc += part * c ** (1.0 - a) * pu
        lo = c
    if last:
        c = hi - lo
        pv = 1.0 / (1.0 - b)
        part = 0.0
        for i in range(cx.shape[0]):
            v = 0.5 * (cx[i] + 1.0)
            y = k - c * v**pv
            part += 0.5 * cw[i] * y ** (-a) * _smooth_part(y, k, q, kind, power, xs, ws)
        acc += part * c ** (1.0 - b) * pv
        hi = lo
    if hi > lo:
        part = 0.0
        for i in range(cx.shape[0]):
            y = lo + 0.5 * (hi - lo) * (cx[i] + 1.0)
            part += 0.5 * cw[i] * y ** (-a) * (k - y) ** (-b) * _smooth_part(y, k, q, kind, power, xs, ws)
        acc += part * (hi - lo)
    return acc


@njit(cache=True, fastmath=True, error_model="numpy")
def _volterra_matrix_nb(n, q, kind, power, cx, cw, xs, ws):
    out = np.zeros((n, n))
    for k in range(1, n + 1):
        for j in range(k):
            out[k - 1, j] = _cell_mean(k, j, q, kind, power, cx, cw, xs, ws)
    return out


def _vec_gl(kind, y, q, a, b, xs, ws):
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    z = mid[:, None] + half[:, None] * xs[None, :]
    if kind == 0:
        vals = (y[:, None] + z ** (1.0 / q)) ** q
    else:
        vals = (y[:, None] + z ** (1.0 / (1.0 - q))) ** (q - 1.0)
    return (vals * ws[None, :]).sum(axis=1) * half


def _vec_inner(kind, y, k, q, xs, ws):
    if kind == 0:
        top = (k - y) ** q
        cut = y**q
    else:
        top = (k - y) ** (1.0 - q)
        cut = y ** (1.0 - q)
    split = (cut > 0.0) & (cut < top)
    mid = np.where(split, cut, top)
    acc = _vec_gl(kind, y, q, np.zeros_like(y), mid, xs, ws)
    if kind == 0:
        acc = acc + np.where(split, _vec_gl(kind, y, q, mid, top, xs, ws), 0.0)
        return acc
    span = np.log(np.where(split, top / np.where(split, cut, 1.0), 1.0))
    v = cut[:, None] * np.exp(0.5 * span[:, None] * (xs[None, :] + 1.0))
    tail = (ws[None, :] * v * (y[:, None] + v ** (1.0 / (1.0 - q))) ** (q - 1.0)).sum(axis=1)
    acc = acc + np.where(split, 0.5 * span * tail, 0.0)
    return acc / (1.0 - q)


def _vec_kernel(y, k, q, kind, power, xs, ws):
    if kind == 0:
        return (y ** (-q) * _vec_inner(0, y, k, q, xs, ws)) ** power
    inner = _vec_inner(1, y, k, q, xs, ws)
    return y ** (-q) * (k - y) ** (-q) * (k**q - q * (k - y) ** q * inner)


def _volterra_matrix_np(n, q, kind, power, cx, cw, xs, ws):
    out = np.zeros((n, n))
    cell = getattr(_cell_mean, "py_func", _cell_mean)
    ynode = 0.5 * (cx + 1.0)
    for k in range(1, n + 1):
        if k >= 3:
            j = np.arange(1, k - 1, dtype=float)
            y = (j[:, None] + ynode[None, :]).ravel()
            vals = _vec_kernel(y, float(k), q, kind, power, xs, ws)
            out[k - 1, 1 : k - 1] = (vals.reshape(-1, cx.size) * (0.5 * cw)[None, :]).sum(axis=1)
        out[k - 1, 0] = cell(k, 0, q, kind, power, cx, cw, xs, ws)
        if k >= 2:
            out[k - 1, k - 1] = cell(k, k - 1, q, kind, power, cx, cw, xs, ws)
    return out


# pow-bound: the vectorized form beats the compiled loop here, so it is used
# in both modes and the loop version serves as a cross-check
volterra_matrix = _volterra_matrix_np
