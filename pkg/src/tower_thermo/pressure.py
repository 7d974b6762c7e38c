"""Gurevich pressure by two routes, Gibbs measures, and their verification.

Route one sums exp(Birkhoff sums) over all period-n orbits through a fixed
cylinder (true enumeration, log-sum-exp, cost N^(n-1)); route two takes the
Perron eigenvalue of a transfer matrix by power iteration.  The two are kept
algorithmically independent so they can cross-check each other.

The enumeration ladder (1/n) log Z_n carries an O(1/n) bias, so the reported
estimate is the consecutive-difference estimator log Z_{n} - log Z_{n-1}
(optionally Aitken-accelerated), which is exact for memoryless potentials and
geometrically convergent for block potentials.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .shift import (
    Alphabet,
    InvalidInputError,
    PeriodicSequence,
    Potential,
    TwoBlockPotential,
    block_table,
)

__all__ = [
    "TransferMatrix",
    "PressureReport",
    "GibbsReport",
    "MarkovMeasure",
    "pressure_periodic",
    "pressure_spectral",
    "gibbs_measure",
    "verify_gibbs",
    "verify_variational",
]

ENUM_BUDGET = 200_000  # word budget for the non-tabulated slow path


class ResourceError(RuntimeError):
    """Enumeration budget exceeded."""


class NumericalError(RuntimeError):
    """Iteration failed to converge."""


def worker_count():
    """Worker cap from TOWER_THERMO_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("TOWER_THERMO_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class TransferMatrix:
    """M[a, b] = exp(phi_hat(a, b)) for the 2-block collapse of a potential."""

    log_entries: np.ndarray
    collapse_error: float = 0.0

    def __post_init__(self):
        self.log_entries = np.asarray(self.log_entries, float)
        N = self.log_entries.shape[0]
        if self.log_entries.shape != (N, N) or N < 1:
            raise InvalidInputError("transfer matrix must be square, N >= 1")
        if not np.all(np.isfinite(self.log_entries)):
            raise InvalidInputError("entries must be strictly positive (finite logs)")

    @property
    def dimension(self):
        return self.log_entries.shape[0]

    @classmethod
    def from_potential(cls, phi, collapse_depth=2):
        """Average phi over length-``collapse_depth`` cylinders down to 2-block
        dependence; the recorded collapse error is the variation tail."""
        if collapse_depth < 2:
            raise InvalidInputError("collapse_depth must be >= 2")
        N = phi.alphabet.size
        if phi.window is not None and 0 <= phi.window[0] and phi.window[1] <= 1:
            table, err = block_table(phi, 0, 1)
            return cls(table, err)
        table, err = block_table(phi, 0, collapse_depth - 1)
        while table.ndim > 2:
            table = table.mean(axis=-1)
        return cls(table, err)


@dataclass
class PressureReport:
    estimate: float
    method: str
    n_used: int
    truncation: int
    base_symbol: int | None
    convergence_gap: float
    ladder: list = field(default_factory=list)
    diff_ladder: list = field(default_factory=list)
    per_base: dict = field(default_factory=dict)
    collapse_error: float = 0.0

    def to_json(self):
        return {
            "estimate": self.estimate,
            "method": self.method,
            "n_used": self.n_used,
            "truncation": self.truncation,
            "base_symbol": self.base_symbol,
            "convergence_gap": self.convergence_gap,
        }


@dataclass
class GibbsReport:
    C0_observed: float
    L: int
    pressure_used: float
    worst_word: tuple | None = None
    zero_mass: bool = False
    per_length: list = field(default_factory=list)

    def to_json(self):
        return {
            "C0_observed": self.C0_observed,
            "L": self.L,
            "pressure_used": self.pressure_used,
        }


def _log_zn_enumerate(phi, b, n):
    """Slow path: evaluate phi on every period-n orbit through [b]."""
    N = phi.alphabet.size
    total = N ** (n - 1)
    if total > ENUM_BUDGET:
        raise ResourceError(
            f"enumeration budget exceeded: N^(n-1) = {total} > {ENUM_BUDGET}"
        )
    vals = np.empty(total)
    word = [b] + [0] * (n - 1)
    for idx in range(total):
        k = idx
        for m in range(n - 1, 0, -1):
            word[m] = k % N
            k //= N
        a = PeriodicSequence(word)
        vals[idx] = math.fsum(phi.value(a.shifted(j)) for j in range(n))
    mx = vals.max()
    return float(mx + np.log(np.exp(vals - mx).sum()))


def _log_zn_table(phi, b, ns):
    lo, hi = phi.window
    table, _ = block_table(phi, lo, hi)
    N = phi.alphabet.size
    workers = worker_count()
    if workers <= 1 or len(ns) <= 1:
        return kernels.periodic_logsums(table, N, lo, b, ns)
    with ThreadPoolExecutor(max_workers=workers) as ex:
        futs = [ex.submit(kernels.periodic_logsums, table, N, lo, b, [n]) for n in ns]
        return np.array([f.result()[0] for f in futs])


def _accelerated(diffs):
    """Aitken delta-squared on the difference ladder when it is long enough."""
    if len(diffs) >= 3:
        d0, d1, d2 = diffs[-3], diffs[-2], diffs[-1]
        denom = d2 - 2 * d1 + d0
        if abs(denom) > 1e-13 * max(1.0, abs(d2)):
            acc = d2 - (d2 - d1) ** 2 / denom
            # guard against acceleration on noise
            if abs(acc - d2) <= 2 * abs(d2 - d1):
                return acc
    return diffs[-1]


def pressure_periodic(phi, b=0, n_max=10, n_min=2):
    """Gurevich pressure from periodic-orbit sums through the cylinder [b].

    Enumerates every period-n word with a_0 = b for n = n_min..n_max and
    accumulates exp(Birkhoff sum) in log space."""
    if n_max > 16:
        raise ResourceError("n_max above 16 is not supported (enumeration cost)")
    if n_max < 2:
        raise InvalidInputError("need n_max >= 2")
    N = phi.alphabet.size
    phi.alphabet.check([b])
    ns = list(range(max(1, n_min - 1), n_max + 1))
    if phi.window is not None and (phi.window[1] - phi.window[0]) < 8:
        logz = _log_zn_table(phi, b, ns)
    else:
        logz = np.array([_log_zn_enumerate(phi, b, n) for n in ns])
    ladder = [lz / n for n, lz in zip(ns, logz)]
    diffs = [float(b2 - b1) for b1, b2 in zip(logz, logz[1:])]
    estimate = _accelerated(diffs) if diffs else ladder[-1]
    gap = abs(ladder[-1] - ladder[-2]) if len(ladder) >= 2 else float("nan")
    return PressureReport(
        estimate=float(estimate),
        method="periodic_orbits",
        n_used=n_max,
        truncation=N,
        base_symbol=int(b),
        convergence_gap=float(gap),
        ladder=[float(x) for x in ladder],
        diff_ladder=diffs,
    )


def pressure_spectral(phi, N=None, collapse_depth=2, tol=1e-12, max_iter=100_000):
    """log spectral radius of the transfer matrix via power iteration
    (deterministic all-ones start)."""
    tm = phi if isinstance(phi, TransferMatrix) else TransferMatrix.from_potential(phi, collapse_depth)
    logM = tm.log_entries
    shift = float(logM.max())
    M = np.exp(logM - shift)
    v = np.ones(tm.dimension)
    lam_old = 0.0
    gap = float("nan")
    for it in range(1, max_iter + 1):
        w = M @ v
        lam = float(w.sum() / v.sum())
        v = w / w.max()
        gap = abs(lam - lam_old)
        if gap <= tol * abs(lam) and it > 2:
            return PressureReport(
                estimate=float(np.log(lam) + shift),
                method="spectral_radius",
                n_used=it,
                truncation=tm.dimension,
                base_symbol=None,
                convergence_gap=gap,
                collapse_error=tm.collapse_error,
            )
        lam_old = lam
    raise NumericalError(f"power iteration did not converge in {max_iter} iterations")


class MarkovMeasure:
    """Stationary Markov measure; the Gibbs measure of a 2-block potential is
    built from the Perron eigendata of its transfer matrix."""

    def __init__(self, pi, P, log_rho=None, collapse_error=0.0):
        self.pi = np.asarray(pi, float)
        self.P = np.asarray(P, float)
        self.log_rho = log_rho
        self.collapse_error = collapse_error
        if abs(self.pi.sum() - 1.0) > 1e-10:
            raise InvalidInputError("stationary vector must sum to 1")

    @property
    def N(self):
        return len(self.pi)

    def cylinder_log_mass(self, word):
        w = list(word)
        acc = math.log(self.pi[w[0]]) if self.pi[w[0]] > 0 else -math.inf
        for a, b in zip(w, w[1:]):
            p = self.P[a, b]
            acc += math.log(p) if p > 0 else -math.inf
        return acc

    def cylinder_mass(self, word):
        return math.exp(self.cylinder_log_mass(word))

    def entropy(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            lp = np.where(self.P > 0, np.log(np.where(self.P > 0, self.P, 1.0)), 0.0)
        return float(-(self.pi[:, None] * self.P * lp).sum())

    def integral_two_block(self, log_matrix):
        return float((self.pi[:, None] * self.P * np.asarray(log_matrix)).sum())

    def free_energy(self, log_matrix):
        return self.entropy() + self.integral_two_block(log_matrix)


def _perron_vector(M, tol=1e-14, max_iter=100_000):
    v = np.ones(M.shape[0])
    lam_old = 0.0
    for _ in range(max_iter):
        w = M @ v
        lam = float(w.max())
        v = w / lam
        if abs(lam - lam_old) <= tol * lam:
            return lam, v / v.sum()
        lam_old = lam
    raise NumericalError("Perron vector iteration did not converge")


def gibbs_measure(phi, collapse_depth=2):
    """Gibbs measure of the 2-block collapse: pi_a = l_a r_a, transitions
    P[a,b] = M[a,b] r_b / (rho r_a)."""
    tm = phi if isinstance(phi, TransferMatrix) else TransferMatrix.from_potential(phi, collapse_depth)
    shift = float(tm.log_entries.max())
    M = np.exp(tm.log_entries - shift)
    rho, r = _perron_vector(M)
    _, l = _perron_vector(M.T)
    pi = l * r
    pi = pi / pi.sum()
    P = M * r[None, :] / (rho * r[:, None])
    P = P / P.sum(axis=1, keepdims=True)
    return MarkovMeasure(pi, P, log_rho=float(np.log(rho) + shift), collapse_error=tm.collapse_error)


def verify_gibbs(measure, phi, pressure, L, extensions=2):
    """Observed Gibbs constant over all cylinders of length <= L.

    For each word the Birkhoff sum is evaluated at interior points obtained by
    appending ``extensions`` extra symbols (then edge-filled); the reported
    constant is max(ratio, 1/ratio) over all cylinders and sample points."""
    if L > 8:
        raise ResourceError("full cylinder enumeration limited to L <= 8")
    N = phi.alphabet.size
    worst = 1.0
    worst_word = None
    zero_mass = False
    per_length = []
    for n in range(1, L + 1):
        level_worst = 1.0
        for flat in range(N**n):
            word = []
            k = flat
            for _ in range(n):
                word.append(k % N)
                k //= N
            word.reverse()
            lm = measure.cylinder_log_mass(word)
            if lm == -math.inf:
                zero_mass = True
                continue
            for ext in range(extensions):
                full = word + [(word[-1] + ext) % N]
                # phi(sigma^j a) with a presented by the extended word
                s = math.fsum(phi.value_at_word(full, anchor=-j) for j in range(n))
                log_ratio = lm - (-n * pressure + s)
                r = math.exp(abs(log_ratio))
                if r > level_worst:
                    level_worst = r
                if r > worst:
                    worst, worst_word = r, tuple(word)
        per_length.append((n, level_worst))
    return GibbsReport(
        C0_observed=float("inf") if zero_mass else worst,
        L=L,
        pressure_used=pressure,
        worst_word=worst_word,
        zero_mass=zero_mass,
        per_length=per_length,
    )


def verify_variational(phi, candidates, pressure, tol=1e-9):
    """Check h(nu) + int(phi) <= pressure for Markov candidates; returns the
    per-candidate free energies and the best one."""
    tm = TransferMatrix.from_potential(phi) if not isinstance(phi, TransferMatrix) else phi
    rows = []
    ok = True
    for name, m in candidates:
        fe = m.free_energy(tm.log_entries)
        violation = fe - pressure
        if violation > tol:
            ok = False
        rows.append({"name": name, "free_energy": fe, "excess": violation})
    best = max(rows, key=lambda r: r["free_energy"]) if rows else None
    return {"ok": ok, "pressure": pressure, "candidates": rows, "best": best}
