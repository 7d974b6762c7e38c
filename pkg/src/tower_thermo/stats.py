"""Empirical ergodic-property checks: correlation decay and the CLT.

Finite Markov models are handled by exact linear algebra (no sampling error);
smooth systems through orbit segments started from a measure sampler.  Every
randomized report carries its seed."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .shift import InvalidInputError

__all__ = [
    "CorrelationSeries",
    "correlations_markov",
    "correlations_orbit",
    "fit_decay",
    "clt_check",
    "markov_chain_sampler",
]


@dataclass
class CorrelationSeries:
    lags: list
    values: list
    stderr: list
    exact: bool
    seed: int | None = None
    tags: dict = field(default_factory=dict)

    def to_csv(self):
        lines = ["lag,value,stderr"]
        for l, v, s in zip(self.lags, self.values, self.stderr):
            lines.append(f"{l},{v:.17g},{s:.17g}")
        return "\n".join(lines) + "\n"


def correlations_markov(P, pi, h1, h2, n_max):
    """Exact correlations |E[h1(X_n) h2(X_0)] - E h1 E h2| of a stationary
    finite chain, by matrix powers."""
    P = np.asarray(P, float)
    pi = np.asarray(pi, float)
    h1 = np.asarray(h1, float)
    h2 = np.asarray(h2, float)
    mean1 = float(pi @ h1)
    mean2 = float(pi @ h2)
    vals = []
    v = h1.copy()
    for n in range(n_max + 1):
        vals.append(abs(float((pi * h2) @ v) - mean1 * mean2))
        v = P @ v
    return CorrelationSeries(
        lags=list(range(n_max + 1)),
        values=vals,
        stderr=[0.0] * (n_max + 1),
        exact=True,
    )


def correlations_orbit(step_batch, points, weights, h1, h2, n_max, seed=0,
                       tags=None):
    """Correlations along orbit segments started at weighted points.

    The measure is whatever the sampler provides (for smooth systems an
    approximate equilibrium sampler: tower-cell weights pushed through the
    lift); reports are tagged accordingly."""
    x = np.atleast_2d(np.asarray(points, float))
    w = np.asarray(weights, float)
    w = w / w.sum()
    f2 = h2(x)
    mean2 = float(w @ f2)
    vals, errs = [], []
    cur = x.copy()
    for n in range(n_max + 1):
        f1 = h1(cur)
        mean1 = float(w @ f1)
        prod = float(w @ (f1 * f2))
        c = prod - mean1 * mean2
        # weighted standard error of the cross term
        var = float(w @ (f1 * f2 - prod) ** 2)
        neff = 1.0 / float((w**2).sum())
        vals.append(abs(c))
        errs.append(math.sqrt(max(var, 0.0) / neff))
        cur = step_batch(cur)
    return CorrelationSeries(
        lags=list(range(n_max + 1)),
        values=vals,
        stderr=errs,
        exact=False,
        seed=seed,
        tags=dict(tags or {}, sampler="approximate"),
    )


def initial_decay_window(series, start=1):
    """Largest initial run of strictly decreasing lags; deterministic cloud
    estimators develop a synchronized-reentry echo past their first minimum,
    so the fit window ends there."""
    vals = series.values
    end = start
    while end + 1 < len(vals) and vals[end + 1] < vals[end]:
        end += 1
    return (start, end)


def fit_decay(series, noise_factor=2.0, min_lags=8, lag_window=None):
    """Least squares on log C_n: returns (K, theta, r2) or an inconclusive
    verdict when too few lags clear the noise floor.

    ``lag_window=(lo, hi)`` restricts the fit to an explicit lag range
    (inclusive), bypassing the stderr-based floor."""
    lags = np.asarray(series.lags, float)
    vals = np.asarray(series.values, float)
    errs = np.asarray(series.stderr, float)
    floor = noise_factor * errs
    usable = (vals > floor) & (vals > 0) & (lags >= 1)
    if series.exact:
        usable = (vals > 1e-14) & (lags >= 1)
    if lag_window is not None:
        lo, hi = lag_window
        usable = (vals > 0) & (lags >= lo) & (lags <= hi)
    if usable.sum() < min_lags:
        return {"verdict": "inconclusive", "usable_lags": int(usable.sum()),
                "K": float("nan"), "theta": float("nan"), "r2": float("nan")}
    x = lags[usable]
    y = np.log(vals[usable])
    coef = np.polyfit(x, y, 1)
    yhat = np.polyval(coef, x)
    ss_res = float(((y - yhat) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    theta = float(np.exp(coef[0]))
    K = float(np.exp(coef[1]))
    return {"K": K, "theta": theta, "r2": r2, "usable_lags": int(usable.sum()),
            "verdict": "exponential" if theta < 1 else "no-decay"}


def markov_chain_sampler(P, pi, seed):
    """Stationary chain path sampler (for CLT tests on finite models)."""
    P = np.asarray(P, float)
    pi = np.asarray(pi, float)
    cum = np.cumsum(P, axis=1)
    cpi = np.cumsum(pi)

    def path(n, rng):
        out = np.empty(n, dtype=np.int64)
        s = int(np.searchsorted(cpi, rng.random()))
        for i in range(n):
            out[i] = s
            s = int(np.searchsorted(cum[s], rng.random()))
        return out

    return path


def clt_check(make_replica, n, replicas=600, seed=0, ks_threshold=0.05,
              degenerate_tol=1e-12):
    """Distributional check of the normalized Birkhoff sums.

    ``make_replica(rng)`` returns one value of (1/sqrt(n)) * sum (h - mean);
    the report carries sigma_hat, the Kolmogorov-Smirnov distance to the
    fitted normal, and the degenerate flag for sigma ~ 0 (observable
    cohomologous to a constant)."""
    if replicas < 500:
        raise InvalidInputError("need at least 500 replicas")
    rng = np.random.default_rng(seed)
    xs = np.array([make_replica(rng) for _ in range(replicas)])
    sigma = float(xs.std(ddof=1))
    out = {"sigma_hat": sigma, "n": n, "replicas": replicas, "seed": seed,
           "ks_threshold": ks_threshold}
    if sigma < degenerate_tol:
        out.update({"degenerate": True, "ks_stat": 0.0, "pass": True})
        return out
    z = np.sort((xs - xs.mean()) / sigma)
    # KS distance to the standard normal at the fitted parameters
    from math import erf, sqrt

    cdf = 0.5 * (1.0 + np.array([erf(v / sqrt(2.0)) for v in z]))
    i = np.arange(1, replicas + 1)
    ks = float(np.max(np.maximum(i / replicas - cdf, cdf - (i - 1) / replicas)))
    out.update({"degenerate": False, "ks_stat": ks, "pass": ks < ks_threshold})
    return out


def birkhoff_replica_factory(path_sampler, h, n, mean_h):
    """CLT replica maker for a finite chain: one centered normalized Birkhoff
    sum (1/sqrt(n)) sum (h(X_i) - mean) per call."""
    h = np.asarray(h, float)

    def make(rng):
        p = path_sampler(n, rng)
        return float((h[p] - mean_h).sum() / math.sqrt(n))

    return make
