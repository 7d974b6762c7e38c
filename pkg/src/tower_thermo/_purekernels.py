"""Pure numpy implementations of the hot kernels.

Selected at import by :mod:`tower_thermo.kernels` when the compiled extension
is unavailable.  Must stay numerically interchangeable with ``_core.pyx``:
same Dormand-Prince coefficients, same slow-down function, same enumeration
order for the periodic sums.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

# ---------------------------------------------------------------------------
# slow-down function psi(u): 1 for u >= u0, power core on [0, u0/2], smooth
# monotone glue on [u0/2, u0].  variant 0: core (u/u0)^alpha (normalized),
# variant 1: core (u*r0)^alpha (as printed); both glued to 1 at u0.


def _wglue(s):
    s = np.clip(s, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(s > 0.0, np.exp(-1.0 / np.maximum(s, 1e-300)), 0.0)
        b = np.where(s < 1.0, np.exp(-1.0 / np.maximum(1.0 - s, 1e-300)), 0.0)
    return a / (a + b)


def _dwglue(s):
    s = np.clip(s, 0.0, 1.0)
    inner = (s > 0.0) & (s < 1.0)
    w = _wglue(s)
    out = np.zeros_like(s)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        da = np.where(inner, 1.0 / np.maximum(s, 1e-300) ** 2, 0.0)
        db = np.where(inner, 1.0 / np.maximum(1.0 - s, 1e-300) ** 2, 0.0)
        # d/ds log(a/b) = da + db with a=e^{-1/s}, b=e^{-1/(1-s)}
        out = np.where(inner, w * (1.0 - w) * (da + db), 0.0)
    return out


def _corelog(u, u0, r0, alpha, variant):
    if variant == 0:
        return alpha * np.log(u / u0)
    return alpha * np.log(u * r0)


def psi_eval(u, u0, r0, alpha, variant):
    u = np.asarray(u, float)
    if variant == 2:  # degenerate: no slow-down at all
        return np.ones_like(u)
    out = np.ones_like(u)
    pos = u > 0.0
    core = pos & (u <= 0.5 * u0)
    glue = (u > 0.5 * u0) & (u < u0)
    if np.any(core):
        out = np.where(core, np.exp(_corelog(np.where(pos, u, 1.0), u0, r0, alpha, variant)), out)
    if np.any(glue):
        s = (u - 0.5 * u0) / (0.5 * u0)
        cl = _corelog(np.where(pos, u, 1.0), u0, r0, alpha, variant)
        out = np.where(glue, np.exp((1.0 - _wglue(s)) * cl), out)
    return np.where(u <= 0.0, 0.0, out)


def dpsi_eval(u, u0, r0, alpha, variant):
    """d psi / du."""
    u = np.asarray(u, float)
    if variant == 2:
        return np.zeros_like(u)
    p = psi_eval(u, u0, r0, alpha, variant)
    out = np.zeros_like(u)
    core = (u > 0.0) & (u <= 0.5 * u0)
    glue = (u > 0.5 * u0) & (u < u0)
    safe = np.where(u > 0.0, u, 1.0)
    out = np.where(core, p * alpha / safe, out)
    if np.any(glue):
        s = (u - 0.5 * u0) / (0.5 * u0)
        cl = _corelog(safe, u0, r0, alpha, variant)
        term = (1.0 - _wglue(s)) * alpha / safe - _dwglue(s) * (2.0 / u0) * cl
        out = np.where(glue, p * term, out)
    return out


# ---------------------------------------------------------------------------
# Dormand-Prince RK5(4) for the slow-down flow in eigencoordinates
#   s1' =  s1 psi(u) loglam,  s2' = -s2 psi(u) loglam,  u = s1^2 + s2^2
# with optional 2x2 tangent blocks and the divergence integral.

_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (
    5179 / 57600,
    0.0,
    7571 / 16695,
    393 / 640,
    -92097 / 339200,
    187 / 2100,
    1 / 40,
)


def _rhs(y, u0, r0, alpha, variant, loglam, with_tangent):
    s1 = y[:, 0]
    s2 = y[:, 1]
    u = s1 * s1 + s2 * s2
    p = psi_eval(u, u0, r0, alpha, variant)
    dy = np.empty_like(y)
    dy[:, 0] = s1 * p * loglam
    dy[:, 1] = -s2 * p * loglam
    if with_tangent:
        dp = dpsi_eval(u, u0, r0, alpha, variant)
        j00 = (p + 2.0 * s1 * s1 * dp) * loglam
        j01 = 2.0 * s1 * s2 * dp * loglam
        j10 = -j01
        j11 = -(p + 2.0 * s2 * s2 * dp) * loglam
        # tangent columns (v, w) stored at y[:, 2:4], y[:, 4:6]
        dy[:, 2] = j00 * y[:, 2] + j01 * y[:, 3]
        dy[:, 3] = j10 * y[:, 2] + j11 * y[:, 3]
        if y.shape[1] >= 6:
            dy[:, 4] = j00 * y[:, 4] + j01 * y[:, 5]
            dy[:, 5] = j10 * y[:, 4] + j11 * y[:, 5]
        if y.shape[1] == 7:
            dy[:, 6] = j00 + j11  # divergence integral
    return dy


def _integrate(y0, u0, r0, alpha, variant, loglam, tol, t_end=1.0):
    """Adaptive DP45 over [0, t_end] for a batch; per-point step control."""
    y = np.array(y0, float, copy=True)
    m, dim = y.shape
    with_tangent = dim > 2
    t = np.zeros(m)
    h = np.full(m, 0.1 * t_end)
    active = np.ones(m, bool)
    max_steps = 100000
    for _ in range(max_steps):
        if not active.any():
            break
        ia = np.where(active)[0]
        ya = y[ia]
        ha = np.minimum(h[ia], t_end - t[ia])
        ks = []
        for stage in range(7):
            yt = ya.copy()
            for j, a in enumerate(_DP_A[stage]):
                if a != 0.0:
                    yt += (ha * a)[:, None] * ks[j]
            ks.append(_rhs(yt, u0, r0, alpha, variant, loglam, with_tangent))
        y5 = ya.copy()
        y4 = ya.copy()
        for j in range(7):
            if _DP_B5[j] != 0.0:
                y5 += (ha * _DP_B5[j])[:, None] * ks[j]
            if _DP_B4[j] != 0.0:
                y4 += (ha * _DP_B4[j])[:, None] * ks[j]
        scale = tol + tol * np.maximum(np.abs(ya), np.abs(y5)).max(axis=1)
        err = np.abs(y5 - y4).max(axis=1) / scale
        accept = err <= 1.0
        idx = ia[accept]
        y[idx] = y5[accept]
        t[idx] += ha[accept]
        with np.errstate(divide="ignore"):
            fac = 0.9 * np.where(err > 0, err, 1e-16) ** -0.2
        h[ia] = ha * np.clip(fac, 0.2, 5.0)
        h[ia] = np.maximum(h[ia], 1e-14 * t_end)
        active[ia] = t[ia] < t_end * (1.0 - 1e-15)
    return y


def flow_map(z, u0, r0, alpha, variant, loglam, tol, t_end=1.0):
    """Time-t_end map of the slow-down flow for a batch of points (m, 2)."""
    z = np.atleast_2d(np.asarray(z, float))
    return _integrate(z, u0, r0, alpha, variant, loglam, tol, t_end)[:, :2]


def flow_map_tangent(z, V, u0, r0, alpha, variant, loglam, tol, t_end=1.0):
    """Flow a batch of points with 2x2 tangent frames and divergence integral.

    Returns (z1, V1, intdiv)."""
    z = np.atleast_2d(np.asarray(z, float))
    V = np.asarray(V, float).reshape(len(z), 2, 2)
    y0 = np.concatenate(
        [z, V[:, :, 0], V[:, :, 1], np.zeros((len(z), 1))], axis=1
    )
    y = _integrate(y0, u0, r0, alpha, variant, loglam, tol, t_end)
    V1 = np.empty_like(V)
    V1[:, :, 0] = y[:, 2:4]
    V1[:, :, 1] = y[:, 4:6]
    return y[:, :2], V1, y[:, 6]


# ---------------------------------------------------------------------------
# periodic-orbit enumeration for block potentials


def periodic_logsums(table, N, lo, base, ns, chunk=1 << 19):
    """log of sum over period-n words with a_0 = base of exp(cyclic sum).

    ``table`` is an L-dimensional block table over window [lo, lo+L-1];
    the cyclic Birkhoff sum reads indices modulo n.  Returns one value per
    entry of ``ns``, enumerating all N^(n-1) words in lexicographic order of
    the free coordinates a_1..a_{n-1}."""
    table = np.asarray(table, float)
    L = table.ndim
    flat = table.ravel()
    out = []
    for n in ns:
        total = N ** (n - 1)
        best = -np.inf
        acc = 0.0
        start = 0
        while start < total:
            cnt = min(chunk, total - start)
            idx = np.arange(start, start + cnt, dtype=np.int64)
            digits = np.empty((cnt, n), dtype=np.int64)
            digits[:, 0] = base
            for m in range(1, n):
                digits[:, m] = (idx // (N ** (n - 1 - m))) % N
            s = np.zeros(cnt)
            for j in range(n):
                flat_idx = np.zeros(cnt, dtype=np.int64)
                for m in range(L):
                    flat_idx = flat_idx * N + digits[:, (j + lo + m) % n]
                s += flat[flat_idx]
            mx = float(s.max())
            if mx > best:
                acc *= np.exp(best - mx)
                best = mx
            acc += float(np.exp(s - best).sum())
            start += cnt
        out.append(best + np.log(acc))
    return np.asarray(out)
