"""Counting diagnostics for liftability: element counts by inducing time,
the exponential cutoff, diameter decay, and the binomial entropy utility."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .shift import InvalidInputError

__all__ = [
    "CountProfile",
    "count_profile",
    "check_L2",
    "check_L1",
    "sigma_entropy",
    "binomial_bound_check",
    "BinomialBound",
]


@dataclass
class CountProfile:
    """S_n, S'_n (first returns), S*_n = S_n - S'_n, and growth exponents.

    ``h_fit`` is the least-squares exponent of S*_n when any non-first-return
    elements exist (the liftability cutoff), else of S_n (pure first-return
    schemes, where S_n carries the cutoff role)."""

    n: list
    S: list
    S_first: list
    S_star: list
    h_fit: float
    h_fit_total: float
    h_declared: float | None = None

    def __post_init__(self):
        for n_, s, sf, ss in zip(self.n, self.S, self.S_first, self.S_star):
            if s != sf + ss:
                raise InvalidInputError(f"S_n != S'_n + S*_n at n = {n_}")

    def to_csv(self):
        lines = ["n,S_n,S_first,S_star"]
        for row in zip(self.n, self.S, self.S_first, self.S_star):
            lines.append(",".join(str(v) for v in row))
        return "\n".join(lines) + "\n"

    def to_json(self):
        return {
            "n": self.n,
            "S": self.S,
            "S_first": self.S_first,
            "S_star": self.S_star,
            "h_fit": self.h_fit,
            "h_fit_total": self.h_fit_total,
        }


def _fit_exponent(ns, counts):
    """LS slope of log counts over the upper half of the horizon, zeros
    skipped (early-n transients pollute the exponent)."""
    ns = np.asarray(ns, float)
    cs = np.asarray(counts, float)
    pos = cs > 0
    if pos.sum() < 2:
        return float("nan")
    n_half = ns[pos][len(ns[pos]) // 2 :]
    c_half = cs[pos][len(cs[pos]) // 2 :]
    if len(n_half) < 2:
        n_half, c_half = ns[pos], cs[pos]
    coef = np.polyfit(n_half, np.log(c_half), 1)
    return float(coef[0])


def count_profile(scheme, n_max=None):
    """Exact counts per inducing time up to the truncation horizon."""
    shells_all = {}
    shells_first = {}
    for e in scheme.elements:
        shells_all[e.tau] = shells_all.get(e.tau, 0) + e.count
        if e.first_return:
            shells_first[e.tau] = shells_first.get(e.tau, 0) + e.count
    horizon = n_max or (max(shells_all) if shells_all else 0)
    ns = list(range(1, horizon + 1))
    S = [shells_all.get(n, 0) for n in ns]
    Sf = [shells_first.get(n, 0) for n in ns]
    Ss = [a - b for a, b in zip(S, Sf)]
    h_total = _fit_exponent(ns, S)
    h_star = _fit_exponent(ns, Ss) if any(Ss) else float("nan")
    h_fit = h_star if any(Ss) else h_total
    return CountProfile(ns, S, Sf, Ss, h_fit=h_fit, h_fit_total=h_total)


def check_L2(profile, h, burn_in=2):
    """S*_n <= e^{h n} beyond the burn-in; reports the minimal passing h."""
    if h <= 0:
        raise InvalidInputError("cutoff h must be positive")
    ok = True
    h_min = 0.0
    for n, s in zip(profile.n, profile.S_star):
        if n < burn_in or s == 0:
            continue
        h_min = max(h_min, math.log(s) / n)
        if s > math.exp(h * n):
            ok = False
    return {"pass": ok, "h": h, "minimal_h": h_min, "burn_in": burn_in}


def check_L1(scheme, adapter, epsilon, n_samples=16, l_max=20, N_max=None, seed=0):
    """Search the smallest (l, N) such that sampled iterates of elements with
    tau > N have diameter below epsilon for k = floor(l/2) .. tau-floor(l/2)-1.

    Both window offsets are floored.  Requires a geometric adapter."""
    if adapter is None:
        raise InvalidInputError("check_L1 requires a geometric adapter")
    rng = np.random.default_rng(seed)
    taus = scheme.taus()
    if N_max is None:
        N_max = int(taus.max())
    # iterate diameters per element, sampled
    diam = {}
    for k, e in enumerate(scheme.elements):
        pts = adapter.sample_element(scheme, k, n_samples, rng)
        if pts is None or len(pts) < 2:
            continue
        rows = []
        x = np.asarray(pts, float)
        for _ in range(e.tau):
            rows.append(adapter.diameter(x))
            x = adapter.step_batch(x)
        diam[k] = rows
    if not diam:
        return {"l": None, "N": None, "pass": False, "verdict": "no geometric elements"}
    for l in range(0, l_max + 1, 2):
        for N in range(1, N_max + 1):
            ok = True
            evaluated = 0
            for k, rows in diam.items():
                tau = scheme.elements[k].tau
                if tau <= N:
                    continue
                for kk in range(l // 2, tau - l // 2 - 1):
                    evaluated += 1
                    if rows[kk] >= epsilon:
                        ok = False
                        break
                if not ok:
                    break
            # a vacuous window (nothing evaluated) says nothing about L1
            if ok and evaluated > 0:
                return {"l": l, "N": N, "pass": True, "epsilon": epsilon,
                        "iterates_checked": evaluated}
    return {"l": None, "N": None, "pass": False, "epsilon": epsilon,
            "verdict": "no (l, N) within budget"}


def sigma_entropy(x):
    """Binary entropy sigma(x) = -x log x - (1-x) log(1-x) on [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise InvalidInputError(f"sigma_entropy domain is [0, 1], got {x}")
    if x in (0.0, 1.0):
        return 0.0
    return -x * math.log(x) - (1.0 - x) * math.log(1.0 - x)


@dataclass
class BinomialBound:
    ok: bool
    slack: float

    def __bool__(self):
        return self.ok


def binomial_bound_check(n, m):
    """log C(n, m) <= n * sigma(m/n) with exact integer binomials (n <= 60);
    returns the slack."""
    if not (0 <= m <= n <= 60):
        raise InvalidInputError("need 0 <= m <= n <= 60")
    lhs = math.log(math.comb(n, m))
    rhs = n * sigma_entropy(m / n) if n > 0 else 0.0
    slack = rhs - lhs
    return BinomialBound(ok=slack >= -1e-12, slack=slack)
