# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: slow-down flow integration and periodic-orbit sums.

Mirrors tower_thermo._purekernels (same Dormand-Prince tableau, same psi,
same enumeration order); selected by tower_thermo.kernels when built.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log, pow

cnp.import_array()

BACKEND = "compiled"


# ---------------------------------------------------------------------------
# slow-down function

cdef inline double _wglue(double s) noexcept nogil:
    cdef double a, b
    if s <= 0.0:
        return 0.0
    if s >= 1.0:
        return 1.0
    a = exp(-1.0 / s)
    b = exp(-1.0 / (1.0 - s))
    return a / (a + b)


cdef inline double _dwglue(double s) noexcept nogil:
    cdef double w
    if s <= 0.0 or s >= 1.0:
        return 0.0
    w = _wglue(s)
    return w * (1.0 - w) * (1.0 / (s * s) + 1.0 / ((1.0 - s) * (1.0 - s)))


cdef inline double _corelog(double u, double u0, double r0, double alpha,
                            int variant) noexcept nogil:
    if variant == 0:
        return alpha * log(u / u0)
    return alpha * log(u * r0)


cdef inline double _psi(double u, double u0, double r0, double alpha,
                        int variant) noexcept nogil:
    cdef double s
    if variant == 2:  # degenerate: no slow-down
        return 1.0
    if u >= u0:
        return 1.0
    if u <= 0.0:
        return 0.0
    if u <= 0.5 * u0:
        return exp(_corelog(u, u0, r0, alpha, variant))
    s = (u - 0.5 * u0) / (0.5 * u0)
    return exp((1.0 - _wglue(s)) * _corelog(u, u0, r0, alpha, variant))


cdef inline double _dpsi(double u, double u0, double r0, double alpha,
                         int variant) noexcept nogil:
    cdef double s, p, term
    if variant == 2:
        return 0.0
    if u >= u0 or u <= 0.0:
        return 0.0
    p = _psi(u, u0, r0, alpha, variant)
    if u <= 0.5 * u0:
        return p * alpha / u
    s = (u - 0.5 * u0) / (0.5 * u0)
    term = (1.0 - _wglue(s)) * alpha / u \
        - _dwglue(s) * (2.0 / u0) * _corelog(u, u0, r0, alpha, variant)
    return p * term


def psi_eval_scalar(double u, double u0, double r0, double alpha, int variant):
    return _psi(u, u0, r0, alpha, variant)


# ---------------------------------------------------------------------------
# Dormand-Prince RK5(4); dim = 2 (point) or 7 (point + tangent frame + div)

cdef double _A2[1]
cdef double _A3[2]
cdef double _A4[3]
cdef double _A5[4]
cdef double _A6[5]
cdef double _A7[6]
cdef double _B5[7]
cdef double _B4[7]

_A2[0] = 1.0 / 5.0
_A3[0] = 3.0 / 40.0;      _A3[1] = 9.0 / 40.0
_A4[0] = 44.0 / 45.0;     _A4[1] = -56.0 / 15.0;    _A4[2] = 32.0 / 9.0
_A5[0] = 19372.0 / 6561.0; _A5[1] = -25360.0 / 2187.0
_A5[2] = 64448.0 / 6561.0; _A5[3] = -212.0 / 729.0
_A6[0] = 9017.0 / 3168.0;  _A6[1] = -355.0 / 33.0
_A6[2] = 46732.0 / 5247.0; _A6[3] = 49.0 / 176.0;   _A6[4] = -5103.0 / 18656.0
_A7[0] = 35.0 / 384.0;     _A7[1] = 0.0;            _A7[2] = 500.0 / 1113.0
_A7[3] = 125.0 / 192.0;    _A7[4] = -2187.0 / 6784.0; _A7[5] = 11.0 / 84.0
_B5[0] = 35.0 / 384.0;     _B5[1] = 0.0;            _B5[2] = 500.0 / 1113.0
_B5[3] = 125.0 / 192.0;    _B5[4] = -2187.0 / 6784.0; _B5[5] = 11.0 / 84.0
_B5[6] = 0.0
_B4[0] = 5179.0 / 57600.0; _B4[1] = 0.0;            _B4[2] = 7571.0 / 16695.0
_B4[3] = 393.0 / 640.0;    _B4[4] = -92097.0 / 339200.0
_B4[5] = 187.0 / 2100.0;   _B4[6] = 1.0 / 40.0


cdef inline void _rhs(double* y, double* dy, int dim, double u0, double r0,
                      double alpha, int variant, double loglam) noexcept nogil:
    cdef double s1 = y[0], s2 = y[1]
    cdef double u = s1 * s1 + s2 * s2
    cdef double p = _psi(u, u0, r0, alpha, variant)
    cdef double dp, j00, j01, j10, j11
    dy[0] = s1 * p * loglam
    dy[1] = -s2 * p * loglam
    if dim > 2:
        dp = _dpsi(u, u0, r0, alpha, variant)
        j00 = (p + 2.0 * s1 * s1 * dp) * loglam
        j01 = 2.0 * s1 * s2 * dp * loglam
        j10 = -j01
        j11 = -(p + 2.0 * s2 * s2 * dp) * loglam
        dy[2] = j00 * y[2] + j01 * y[3]
        dy[3] = j10 * y[2] + j11 * y[3]
        dy[4] = j00 * y[4] + j01 * y[5]
        dy[5] = j10 * y[4] + j11 * y[5]
        dy[6] = j00 + j11


cdef int _integrate_one(double* y, int dim, double u0, double r0, double alpha,
                        int variant, double loglam, double tol,
                        double t_end) noexcept nogil:
    cdef double t = 0.0
    cdef double h = 0.1 * t_end
    cdef double ha, err, scale, mx, fac, ay, a5
    cdef double yt[7]
    cdef double y5[7]
    cdef double y4[7]
    cdef double k[7][7]
    cdef int i, j, step
    for step in range(100000):
        if t >= t_end * (1.0 - 1e-15):
            return 0
        ha = h
        if ha > t_end - t:
            ha = t_end - t
        # stages
        _rhs(y, k[0], dim, u0, r0, alpha, variant, loglam)
        for i in range(dim):
            yt[i] = y[i] + ha * _A2[0] * k[0][i]
        _rhs(yt, k[1], dim, u0, r0, alpha, variant, loglam)
        for i in range(dim):
            yt[i] = y[i] + ha * (_A3[0] * k[0][i] + _A3[1] * k[1][i])
        _rhs(yt, k[2], dim, u0, r0, alpha, variant, loglam)
        for i in range(dim):
            yt[i] = y[i] + ha * (_A4[0] * k[0][i] + _A4[1] * k[1][i] + _A4[2] * k[2][i])
        _rhs(yt, k[3], dim, u0, r0, alpha, variant, loglam)
        for i in range(dim):
            yt[i] = y[i] + ha * (_A5[0] * k[0][i] + _A5[1] * k[1][i]
                                 + _A5[2] * k[2][i] + _A5[3] * k[3][i])
        _rhs(yt, k[4], dim, u0, r0, alpha, variant, loglam)
        for i in range(dim):
            yt[i] = y[i] + ha * (_A6[0] * k[0][i] + _A6[1] * k[1][i]
                                 + _A6[2] * k[2][i] + _A6[3] * k[3][i]
                                 + _A6[4] * k[4][i])
        _rhs(yt, k[5], dim, u0, r0, alpha, variant, loglam)
        for i in range(dim):
            yt[i] = y[i] + ha * (_A7[0] * k[0][i] + _A7[2] * k[2][i]
                                 + _A7[3] * k[3][i] + _A7[4] * k[4][i]
                                 + _A7[5] * k[5][i])
        _rhs(yt, k[6], dim, u0, r0, alpha, variant, loglam)
        mx = 0.0
        err = 0.0
        for i in range(dim):
            y5[i] = y[i] + ha * (_B5[0] * k[0][i] + _B5[2] * k[2][i]
                                 + _B5[3] * k[3][i] + _B5[4] * k[4][i]
                                 + _B5[5] * k[5][i])
            y4[i] = y[i] + ha * (_B4[0] * k[0][i] + _B4[2] * k[2][i]
                                 + _B4[3] * k[3][i] + _B4[4] * k[4][i]
                                 + _B4[5] * k[5][i] + _B4[6] * k[6][i])
            ay = fabs(y[i])
            a5 = fabs(y5[i])
            if a5 > ay:
                ay = a5
            if ay > mx:
                mx = ay
        scale = tol + tol * mx
        for i in range(dim):
            ay = fabs(y5[i] - y4[i]) / scale
            if ay > err:
                err = ay
        if err <= 1.0:
            for i in range(dim):
                y[i] = y5[i]
            t += ha
        if err < 1e-16:
            err = 1e-16
        fac = 0.9 * pow(err, -0.2)
        if fac < 0.2:
            fac = 0.2
        if fac > 5.0:
            fac = 5.0
        h = ha * fac
        if h < 1e-14 * t_end:
            h = 1e-14 * t_end
    return 1


def flow_map(z, double u0, double r0, double alpha, int variant,
             double loglam, double tol, double t_end=1.0):
    """Time-t_end map of the slow-down flow for a batch of points (m, 2)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] zz = \
        np.ascontiguousarray(np.atleast_2d(np.asarray(z, float)))
    cdef Py_ssize_t m = zz.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = zz.copy()
    cdef double y[7]
    cdef Py_ssize_t i
    cdef int bad = 0
    with nogil:
        for i in range(m):
            y[0] = out[i, 0]
            y[1] = out[i, 1]
            bad |= _integrate_one(y, 2, u0, r0, alpha, variant, loglam, tol, t_end)
            out[i, 0] = y[0]
            out[i, 1] = y[1]
    if bad:
        raise RuntimeError("flow integration step underflow")
    return out


def flow_map_tangent(z, V, double u0, double r0, double alpha, int variant,
                     double loglam, double tol, double t_end=1.0):
    """Flow points with 2x2 tangent frames; returns (z1, V1, intdiv)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] zz = \
        np.ascontiguousarray(np.atleast_2d(np.asarray(z, float)))
    cdef Py_ssize_t m = zz.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=3] VV = \
        np.ascontiguousarray(np.asarray(V, float).reshape(m, 2, 2))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] zout = zz.copy()
    cdef cnp.ndarray[cnp.float64_t, ndim=3] Vout = VV.copy()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dout = np.zeros(m)
    cdef double y[7]
    cdef Py_ssize_t i
    cdef int bad = 0
    with nogil:
        for i in range(m):
            y[0] = zout[i, 0]
            y[1] = zout[i, 1]
            y[2] = Vout[i, 0, 0]
            y[3] = Vout[i, 1, 0]
            y[4] = Vout[i, 0, 1]
            y[5] = Vout[i, 1, 1]
            y[6] = 0.0
            bad |= _integrate_one(y, 7, u0, r0, alpha, variant, loglam, tol, t_end)
            zout[i, 0] = y[0]
            zout[i, 1] = y[1]
            Vout[i, 0, 0] = y[2]
            Vout[i, 1, 0] = y[3]
            Vout[i, 0, 1] = y[4]
            Vout[i, 1, 1] = y[5]
            dout[i] = y[6]
    if bad:
        raise RuntimeError("flow integration step underflow")
    return zout, Vout, dout


# ---------------------------------------------------------------------------
# periodic-orbit enumeration

cdef inline double _pos_value(double* flat, int* word, int j, int n, int N,
                              int L) noexcept nogil:
    cdef long long fidx = 0
    cdef int mm, d
    for mm in range(L):
        d = j + mm
        while d >= n:
            d -= n
        fidx = fidx * N + word[d]
    return flat[fidx]


def periodic_logsums(table, int N, int lo, int base, ns, chunk=None):
    """log sum over period-n words with a_0 = base of exp(cyclic block sums).

    Cyclic sums do not depend on the window anchor ``lo`` (j + lo runs over
    all residues), so the window is normalized to start at 0.  Words are
    enumerated with an odometer over a_1..a_{n-1}; only the block sums whose
    window touches a changed digit are recomputed."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flat = \
        np.ascontiguousarray(np.asarray(table, float).ravel())
    cdef int L = np.asarray(table).ndim
    cdef list out = []
    cdef long long total, idx
    cdef int n, j, mm, m, d
    cdef double s, best, acc
    cdef int word[64]
    cdef double ps[64]
    cdef unsigned char touched[64]
    if L > 16:
        raise ValueError("block window too long (L > 16)")
    for n_py in ns:
        n = <int> n_py
        if n > 48:
            raise ValueError("period too long (n > 48)")
        total = 1
        for j in range(n - 1):
            total *= N
        best = -1e308
        acc = 0.0
        with nogil:
            word[0] = base
            for j in range(1, n):
                word[j] = 0
            s = 0.0
            for j in range(n):
                ps[j] = _pos_value(&flat[0], word, j, n, N, L)
                s += ps[j]
            for idx in range(total):
                if s > best:
                    if best > -1e307:
                        acc *= exp(best - s)
                    best = s
                    acc += 1.0
                else:
                    acc += exp(s - best)
                if idx + 1 == total:
                    break
                # advance odometer; refresh block sums around changed digits
                for j in range(n):
                    touched[j] = 0
                m = n - 1
                while word[m] == N - 1:
                    word[m] = 0
                    for mm in range(L):
                        d = m - mm
                        while d < 0:
                            d += n
                        touched[d] = 1
                    m -= 1
                word[m] += 1
                for mm in range(L):
                    d = m - mm
                    while d < 0:
                        d += n
                    touched[d] = 1
                for j in range(n):
                    if touched[j]:
                        s -= ps[j]
                        ps[j] = _pos_value(&flat[0], word, j, n, N, L)
                        s += ps[j]
                # periodic refresh caps float drift from incremental updates
                if (idx & 0xFFFFF) == 0xFFFFF:
                    s = 0.0
                    for j in range(n):
                        s += ps[j]
        out.append(best + log(acc))
    return np.asarray(out)
