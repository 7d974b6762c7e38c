"""Truncated countable-alphabet shift spaces.

A countable alphabet is represented by a finite truncation of size N; every
report downstream records the truncation level.  Two-sided sequences are
presented either as periodic sequences or as finite words plus a deterministic
filling convention (repeat the edge symbols), so that potentials defined on
genuinely infinite sequences can be evaluated reproducibly.

Variation indexing follows the cylinder convention: the n-variation of a
potential is the supremum of |phi(a) - phi(a')| over pairs agreeing on
coordinates -n+1 .. n-1 (a window of length 2n-1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Alphabet",
    "Word",
    "Cylinder",
    "PeriodicSequence",
    "WordSequence",
    "PastFilledSequence",
    "HolderBound",
    "TableBound",
    "Potential",
    "ConstantPotential",
    "OneBlockPotential",
    "TwoBlockPotential",
    "TabulatedPotential",
    "CallablePotential",
    "birkhoff_sum",
    "estimate_variation",
    "cocycle_check",
    "block_table",
    "potential_from_descriptor",
    "potential_to_descriptor",
]


class InvalidInputError(ValueError):
    """Raised when symbols fall outside the truncated alphabet."""


@dataclass(frozen=True)
class Alphabet:
    """Finite truncation of a countable symbol set; symbols are 0..size-1."""

    size: int
    labels: tuple | None = None

    def __post_init__(self):
        if self.size < 1:
            raise InvalidInputError(f"alphabet size must be >= 1, got {self.size}")
        if self.labels is not None and len(self.labels) != self.size:
            raise InvalidInputError("labels must match alphabet size")

    def check(self, symbols):
        N = self.size
        for s in symbols:
            if not 0 <= s < N:
                raise InvalidInputError(
                    f"symbol out of alphabet range 0..{N - 1}: {s}"
                )


@dataclass(frozen=True)
class Word:
    """Finite word; ``anchor`` is the coordinate index of the first symbol."""

    symbols: tuple
    anchor: int = 0

    def __post_init__(self):
        if len(self.symbols) < 1:
            raise InvalidInputError("word must have length >= 1")
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))

    def __len__(self):
        return len(self.symbols)

    @property
    def end(self):
        """Index one past the last coordinate."""
        return self.anchor + len(self.symbols)


@dataclass(frozen=True)
class Cylinder:
    """Cylinder set C_anchor[b_anchor .. b_end-1] of a word."""

    word: Word

    def contains(self, seq) -> bool:
        w = self.word
        return all(seq.symbol(w.anchor + i) == s for i, s in enumerate(w.symbols))


class Sequence:
    """Two-sided symbolic sequence presented through ``symbol(k)``."""

    def symbol(self, k: int) -> int:
        raise NotImplementedError

    def shifted(self, j: int) -> "Sequence":
        return _Shifted(self, j) if j else self

    def window(self, lo: int, hi: int):
        return tuple(self.symbol(k) for k in range(lo, hi + 1))


class _Shifted(Sequence):
    def __init__(self, base, j):
        if isinstance(base, _Shifted):
            base, j = base.base, base.j + j
        self.base, self.j = base, j

    def symbol(self, k):
        return self.base.symbol(k + self.j)

    def shifted(self, j):
        return _Shifted(self.base, self.j + j) if self.j + j else self.base


class PeriodicSequence(Sequence):
    """Two-sided periodic repetition of a word anchored at coordinate 0."""

    __slots__ = ("word", "phase")

    def __init__(self, word, phase=0):
        if isinstance(word, Word):
            if word.anchor != 0:
                raise InvalidInputError("periodic word must be anchored at 0")
            word = word.symbols
        self.word = tuple(int(s) for s in word)
        if not self.word:
            raise InvalidInputError("period word must be nonempty")
        self.phase = phase

    @property
    def period(self):
        return len(self.word)

    def symbol(self, k):
        return self.word[(k + self.phase) % len(self.word)]

    def shifted(self, j):
        if not j:
            return self
        out = PeriodicSequence.__new__(PeriodicSequence)
        out.word = self.word
        out.phase = self.phase + j
        return out

    def __repr__(self):
        return f"PeriodicSequence({''.join(map(str, self.word))}, phase={self.phase})"


class WordSequence(Sequence):
    """Finite word extended two-sidedly by repeating its edge symbols."""

    def __init__(self, word, anchor=0):
        if isinstance(word, Word):
            anchor = word.anchor
            word = word.symbols
        self.symbols = tuple(int(s) for s in word)
        self.anchor = anchor

    def symbol(self, k):
        i = min(max(k - self.anchor, 0), len(self.symbols) - 1)
        return self.symbols[i]


class PastFilledSequence(Sequence):
    """Copy of ``base`` on coordinates >= 0 with a fixed past on coordinates < 0."""

    def __init__(self, base, past_fill):
        self.base = base
        self.past_fill = past_fill

    def symbol(self, k):
        return self.base.symbol(k) if k >= 0 else self.past_fill.symbol(k)


# ---------------------------------------------------------------------------
# variation metadata


class HolderBound:
    """Locally Hoelder decay V_n <= C * r^n."""

    def __init__(self, C, r):
        if not (C >= 0 and 0 < r < 1):
            raise InvalidInputError("need C >= 0 and 0 < r < 1")
        self.C, self.r = float(C), float(r)
        self.heuristic_tail = False

    def V(self, n):
        return self.C * self.r**n

    def tail(self, m):
        """sum_{k > m} V_k (exact geometric tail)."""
        return self.C * self.r ** (m + 1) / (1.0 - self.r)

    def summable(self):
        return True

    def to_descriptor(self):
        return {"C": self.C, "r": self.r}


class TableBound:
    """Tabulated variations V_1..V_n; the tail beyond the table is estimated
    from the last entry times a declared decay ratio and flagged heuristic."""

    def __init__(self, values, decay_ratio=0.5):
        self.values = [float(v) for v in values]
        if any(b > a + 1e-15 for a, b in zip(self.values, self.values[1:])):
            raise InvalidInputError("variation table must be nonincreasing")
        if not 0 <= decay_ratio < 1:
            raise InvalidInputError("decay ratio must be in [0, 1)")
        self.decay_ratio = float(decay_ratio)
        self.heuristic_tail = True

    def V(self, n):
        if n <= len(self.values):
            return self.values[n - 1]
        last = self.values[-1] if self.values else 0.0
        return last * self.decay_ratio ** (n - len(self.values))

    def tail(self, m):
        n_tab = len(self.values)
        s = sum(self.values[k] for k in range(m, n_tab))  # V_{m+1}..V_{n_tab}
        last = self.values[-1] if self.values else 0.0
        if self.decay_ratio > 0:
            skip = max(m - n_tab, 0)
            s += last * self.decay_ratio * self.decay_ratio**skip / (1 - self.decay_ratio)
        return s

    def summable(self):
        return True

    def to_descriptor(self):
        return {"table": self.values, "decay_ratio": self.decay_ratio, "heuristic": True}


class ZeroBound(HolderBound):
    def __init__(self):
        super().__init__(0.0, 0.5)


# ---------------------------------------------------------------------------
# potentials


class Potential:
    """Evaluation rule on two-sided sequences plus variation-decay metadata.

    ``window`` is the dependence window (lo, hi) when the value depends on
    finitely many coordinates, else None.  ``fill_convention`` records how
    word presentations are extended to genuine sequences.
    """

    kind = "generic"
    window = None
    fill_convention = "repeat_edge"

    def __init__(self, alphabet, var_bound=None, sup_bound=None):
        self.alphabet = alphabet
        self.var_bound = var_bound if var_bound is not None else ZeroBound()
        self.sup_bound = sup_bound

    def value(self, seq) -> float:
        raise NotImplementedError

    def value_at_word(self, symbols, anchor=0):
        """Evaluate on a word presentation with the edge-repeat filling."""
        return self.value(WordSequence(symbols, anchor))

    def descriptor_params(self):
        return {}


class ConstantPotential(Potential):
    kind = "constant"
    window = (0, 0)

    def __init__(self, alphabet, c=0.0):
        super().__init__(alphabet, ZeroBound(), sup_bound=c)
        self.c = float(c)

    def value(self, seq):
        self.alphabet.check([seq.symbol(0)])
        return self.c

    def descriptor_params(self):
        return {"c": self.c}


class OneBlockPotential(Potential):
    """phi(a) = w[a_0]; the Bernoulli family is w = log p."""

    kind = "bernoulli"
    window = (0, 0)

    def __init__(self, alphabet, weights):
        w = np.asarray(weights, float)
        if w.shape != (alphabet.size,):
            raise InvalidInputError("need one weight per symbol")
        super().__init__(alphabet, ZeroBound(), sup_bound=float(w.max()))
        self.weights = w

    def value(self, seq):
        s = seq.symbol(0)
        self.alphabet.check([s])
        return float(self.weights[s])

    def descriptor_params(self):
        return {"weights": self.weights.tolist()}


class TwoBlockPotential(Potential):
    """phi(a) = logM[a_0, a_1]; first-order Markov interaction."""

    kind = "markov1"
    window = (0, 1)

    def __init__(self, alphabet, log_matrix):
        M = np.asarray(log_matrix, float)
        if M.shape != (alphabet.size, alphabet.size):
            raise InvalidInputError("log matrix must be N x N")
        # a, a' agreeing on coordinate 0 alone can differ at a_1
        v1 = float((M.max(axis=1) - M.min(axis=1)).max())
        super().__init__(
            alphabet, TableBound([v1], decay_ratio=0.0), sup_bound=float(M.max())
        )
        self.log_matrix = M

    def value(self, seq):
        a, b = seq.symbol(0), seq.symbol(1)
        self.alphabet.check([a, b])
        return float(self.log_matrix[a, b])

    def descriptor_params(self):
        return {"log_matrix": self.log_matrix.tolist()}


class TabulatedPotential(Potential):
    """Table over a finite coordinate window [lo, hi]."""

    kind = "tabulated"

    def __init__(self, alphabet, table, lo=0, var_bound=None):
        table = np.asarray(table, float)
        L = table.ndim
        if table.shape != (alphabet.size,) * L:
            raise InvalidInputError("table must be N^L")
        self.table = table
        self.lo = int(lo)
        self.window = (self.lo, self.lo + L - 1)
        if var_bound is None:
            var_bound = TableBound(self._exact_variations(), decay_ratio=0.0)
        super().__init__(alphabet, var_bound, sup_bound=float(table.max()))

    def _exact_variations(self):
        # V_n: group table cells by the coordinates inside [-n+1, n-1]
        lo, hi = self.window
        out = []
        n = 1
        while True:
            shared = [k for k in range(lo, hi + 1) if -n + 1 <= k <= n - 1]
            if len(shared) == hi - lo + 1:
                out.append(0.0)
                break
            axes = tuple(k - lo for k in range(lo, hi + 1) if k not in shared)
            v = float((self.table.max(axis=axes) - self.table.min(axis=axes)).max())
            out.append(v)
            n += 1
        # enforce monotonicity against rounding
        for i in range(len(out) - 2, -1, -1):
            out[i] = max(out[i], out[i + 1])
        return out

    def value(self, seq):
        lo, hi = self.window
        sym = seq.symbol
        idx = tuple(sym(k) for k in range(lo, hi + 1))
        self.alphabet.check(idx)
        return float(self.table[idx])

    def descriptor_params(self):
        return {"table": self.table.tolist(), "lo": self.lo}


class CallablePotential(Potential):
    """Wrap an arbitrary evaluation rule; the caller declares the decay."""

    kind = "callable"

    def __init__(self, alphabet, fn, var_bound, window=None, sup_bound=None):
        super().__init__(alphabet, var_bound, sup_bound=sup_bound)
        self.fn = fn
        self.window = window

    def value(self, seq):
        return float(self.fn(seq))


# ---------------------------------------------------------------------------
# operations


def birkhoff_sum(phi, a, n):
    """Birkhoff sum of phi over the first n shifts of the sequence a."""
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    return math.fsum(phi.value(a.shifted(k)) for k in range(n))


def estimate_variation(phi, n, samples, horizon=None, seed=0):
    """Lower bound on V_n(phi) from sampled pairs sharing coordinates
    -n+1 .. n-1 and differing randomly outside (up to ``horizon``)."""
    if n < 1 or samples < 2:
        raise InvalidInputError("need n >= 1 and samples >= 2")
    N = phi.alphabet.size
    if horizon is None:
        horizon = 2 * n + 24
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(samples):
        lo, hi = -horizon, horizon
        core = rng.integers(0, N, size=2 * n - 1)
        x = rng.integers(0, N, size=hi - lo + 1)
        y = rng.integers(0, N, size=hi - lo + 1)
        x[(-n + 1) - lo : n - lo] = core
        y[(-n + 1) - lo : n - lo] = core
        vx = phi.value(WordSequence(x, anchor=lo))
        vy = phi.value(WordSequence(y, anchor=lo))
        best = max(best, abs(vx - vy))
    return best


def cocycle_check(phi, a, n, m, tol=1e-12):
    """Birkhoff additivity: |phi_{n+m}(a) - phi_n(a) - phi_m(sigma^n a)| <= tol."""
    if n < 1 or m < 1:
        raise InvalidInputError("need n, m >= 1")
    total = birkhoff_sum(phi, a, n + m)
    split = birkhoff_sum(phi, a, n) + birkhoff_sum(phi, a.shifted(n), m)
    return abs(total - split) <= tol


def block_table(phi, lo, hi):
    """Collapse phi to a table over window [lo, hi] with the edge-repeat fill.

    Returns (table, collapse_error); the error is zero when the dependence
    window is contained in [lo, hi], else the variation tail at the collapse
    depth."""
    N = phi.alphabet.size
    L = hi - lo + 1
    shape = (N,) * L
    table = np.empty(shape)
    for idx in np.ndindex(shape):
        table[idx] = phi.value(WordSequence(idx, anchor=lo))
    if phi.window is not None and lo <= phi.window[0] and phi.window[1] <= hi:
        err = 0.0
    else:
        depth = min(-lo, hi) + 1 if min(-lo, hi) >= 0 else 1
        err = 2.0 * phi.var_bound.tail(max(depth - 1, 0))
    return table, err


# ---------------------------------------------------------------------------
# JSON descriptors

_KINDS = {}


def register_potential_kind(kind, loader):
    _KINDS[kind] = loader


def potential_from_descriptor(desc, alphabet=None):
    """Build a potential from {"kind": ..., "params": {...}, "holder": {...}}."""
    kind = desc["kind"]
    params = desc.get("params", {})
    if alphabet is None:
        alphabet = Alphabet(int(desc["alphabet"]))
    if kind == "constant":
        pot = ConstantPotential(alphabet, params.get("c", 0.0))
    elif kind == "bernoulli":
        pot = OneBlockPotential(alphabet, params["weights"])
    elif kind == "markov1":
        pot = TwoBlockPotential(alphabet, params["log_matrix"])
    elif kind == "tabulated":
        pot = TabulatedPotential(alphabet, params["table"], params.get("lo", 0))
    else:
        if kind not in _KINDS:
            # sibling modules register their kinds on import
            from . import cohomology  # noqa: F401
            from . import katok  # noqa: F401
        if kind not in _KINDS:
            raise InvalidInputError(f"unknown potential kind {kind!r}")
        pot = _KINDS[kind](alphabet, params)
    if "holder" in desc and desc["holder"] is not None:
        h = desc["holder"]
        pot.var_bound = HolderBound(h["C"], h["r"])
    return pot


def potential_to_descriptor(phi):
    desc = {"kind": phi.kind, "alphabet": phi.alphabet.size, "params": phi.descriptor_params()}
    if isinstance(phi.var_bound, HolderBound):
        desc["holder"] = phi.var_bound.to_descriptor()
    else:
        desc["var_table"] = phi.var_bound.to_descriptor()
    return desc
