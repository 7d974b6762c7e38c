"""Constructive reduction of two-sided potentials to one-sided ones.

Given a reference past (r_k)_{k<=0}, the transfer function
``u(a) = sum_j phi(sigma^j a) - phi(sigma^j r(a))`` is bounded whenever the
variations of phi are summable, and ``psi = phi + u o sigma - u`` depends on
the nonnegative coordinates only.  Truncating the series at J leaves an error
controlled by the variation tail, which is reported alongside every value.

The truncated psi is evaluated as ``phi(ra) + u_J(sigma ra) - u_J(ra)`` with
``ra`` the past-filled copy of the input; this regrouping keeps the truncation
exactly one-sided (the raw termwise series has a non-vanishing trailing term).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .shift import (
    InvalidInputError,
    PastFilledSequence,
    Potential,
    Sequence,
    birkhoff_sum,
)

__all__ = [
    "ReferenceFill",
    "CoboundaryData",
    "compute_u",
    "default_truncation",
    "reduce_to_one_sided",
    "ReducedPotential",
    "periodic_cohomology_check",
]


class NonSummableError(InvalidInputError):
    """Variation tail diverges; u is not defined."""


@dataclass(frozen=True)
class ReferenceFill(Sequence):
    """Fixed past (r_k)_{k<=0}: a word repeated leftward, default all zeros."""

    word: tuple = (0,)

    def symbol(self, k):
        # anchored so that r_0 is the last symbol of the word
        return self.word[(k - 1) % len(self.word)]

    def fill(self, seq):
        return PastFilledSequence(seq, self)


@dataclass(frozen=True)
class CoboundaryData:
    """Truncation level and the certified series tail for u."""

    J: int
    tail_bound: float

    def __post_init__(self):
        if self.J < 1:
            raise InvalidInputError("truncation J must be >= 1")
        if not (self.tail_bound >= 0 and math.isfinite(self.tail_bound)):
            raise NonSummableError("variation tail is not finite")


def _u_tail(phi, J):
    # sum_{j > J} V_{j+1}(phi) = sum_{k > J+1} V_k(phi)
    t = phi.var_bound.tail(J + 1)
    if not math.isfinite(t):
        raise NonSummableError("declared variations are not summable")
    return t


def default_truncation(phi, tol=1e-10, J_max=100000):
    """Smallest J whose u-series tail bound is below tol."""
    J = 1
    while J < J_max and _u_tail(phi, J) >= tol:
        J += 1
    return CoboundaryData(J, _u_tail(phi, J))


def compute_u(phi, fill, a, J):
    """Truncated transfer function at the sequence a.

    Returns (value, error_bound): the true u lies within error_bound of the
    value since each term is bounded by V_{j+1}(phi)."""
    data = CoboundaryData(J, _u_tail(phi, J))
    ra = fill.fill(a)
    val = math.fsum(
        phi.value(a.shifted(j)) - phi.value(ra.shifted(j)) for j in range(J + 1)
    )
    return val, data.tail_bound


class _BufView(Sequence):
    """Mutable-shift window over a symbol buffer (internal fast path)."""

    __slots__ = ("buf", "shift")

    def __init__(self, buf, shift):
        self.buf = buf
        self.shift = shift

    def symbol(self, k):
        return self.buf[k + self.shift]


class _BowenReducedBound:
    """V_n(psi) <= V_n(phi) + 8 * sum_{j >= floor((n-2)/2)} V_j(phi)."""

    def __init__(self, base):
        self.base = base
        self.heuristic_tail = getattr(base, "heuristic_tail", False)

    def V(self, n):
        m = max((n - 2) // 2, 1)
        return self.base.V(n) + 8.0 * (self.base.V(m) + self.base.tail(m))

    def tail(self, m):
        # crude but summable: geometric-type majorant summed termwise
        s = 0.0
        k = m + 1
        while True:
            v = self.V(k)
            s += v
            if v <= 1e-18 * max(s, 1.0) or k > m + 100000:
                break
            k += 1
        return s

    def summable(self):
        return True

    def to_descriptor(self):
        return {"derived": "bowen", "base": self.base.to_descriptor()}


class ReducedPotential(Potential):
    """One-sided representative psi of a two-sided potential."""

    kind = "reduced"

    def __init__(self, phi, fill, J):
        data = CoboundaryData(J, _u_tail(phi, J))
        super().__init__(phi.alphabet, _BowenReducedBound(phi.var_bound), phi.sup_bound)
        self.base = phi
        self.fill = fill
        self.J = J
        self.truncation_error = 2.0 * data.tail_bound
        if phi.window is not None:
            self.window = (0, max(phi.window[1], 0) + J + 1)

    def value(self, seq):
        # psi(a) = phi(ra) + u_J(sigma ra); u_J(ra) = 0 since ra is already
        # past-filled, so only one truncated series remains.
        phi, J = self.base, self.J
        if phi.window is not None:
            return self._value_buffered(seq)
        ra = self.fill.fill(seq)
        sra = ra.shifted(1)
        rsra = self.fill.fill(sra)
        acc = phi.value(ra)
        for j in range(J + 1):
            acc += phi.value(sra.shifted(j)) - phi.value(rsra.shifted(j))
        return acc

    def _value_buffered(self, seq):
        # gather every coordinate the series touches once, then walk views;
        # terms with j + lo_b >= 0 cancel identically (the two views agree on
        # nonnegative coordinates), so the series stops at -lo_b - 1
        phi, J, fill = self.base, self.J, self.fill
        lo_b, hi_b = phi.window
        J_eff = min(J, -lo_b - 1)
        lo = min(lo_b, 0)
        hi = max(J_eff, 0) + hi_b + 1
        buf_ra = [seq.symbol(k) if k >= 0 else fill.symbol(k) for k in range(lo, hi + 1)]
        v_ra = _BufView(buf_ra, -lo)
        acc = phi.value(v_ra)
        if J_eff < 0:
            return acc
        buf_sra = [
            seq.symbol(k + 1) if k + 1 >= 0 else fill.symbol(k + 1)
            for k in range(lo, hi + 1)
        ]
        buf_rsra = [
            buf_sra[k - lo] if k >= 0 else fill.symbol(k) for k in range(lo, hi + 1)
        ]
        v_sra = _BufView(buf_sra, -lo)
        v_rsra = _BufView(buf_rsra, -lo)
        for j in range(J_eff + 1):
            v_sra.shift = j - lo
            v_rsra.shift = j - lo
            acc += phi.value(v_sra) - phi.value(v_rsra)
        return acc

    def descriptor_params(self):
        from .shift import potential_to_descriptor

        return {
            "base": potential_to_descriptor(self.base),
            "fill": list(self.fill.word),
            "J": self.J,
            "tail_bound": self.truncation_error / 2.0,
        }


def reduce_to_one_sided(phi, fill=None, J=None, tol=1e-10):
    """Build psi = phi + u o sigma - u depending on coordinates >= 0 only."""
    if fill is None:
        fill = ReferenceFill()
    if J is None:
        J = default_truncation(phi, tol).J
    return ReducedPotential(phi, fill, J)


def _load_reduced(alphabet, params):
    from .shift import potential_from_descriptor

    base = potential_from_descriptor(params["base"])
    return ReducedPotential(base, ReferenceFill(tuple(params.get("fill", [0]))),
                            int(params["J"]))


from .shift import register_potential_kind  # noqa: E402  (cycle-free tail import)

register_potential_kind("reduced", _load_reduced)


def periodic_cohomology_check(phi, psi, a):
    """|phi_n(a) - psi_n(a)| over a full period; the coboundary telescopes,
    so this must not exceed twice the u truncation error."""
    n = a.period
    return abs(birkhoff_sum(phi, a, n) - birkhoff_sum(psi, a, n))
