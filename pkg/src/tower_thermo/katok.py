"""The slowed toral automorphism and its first-return inducing schemes.

The base map is T = [[2,1],[1,1]] on the torus.  Inside the disk D_{r1}
(eigencoordinates centered at the fixed point) the dynamics is replaced by the
unit-time map of the slowed linear flow

    s1' =  s1 psi(s1^2 + s2^2) log(lambda)
    s2' = -s2 psi(s1^2 + s2^2) log(lambda)

with psi == 1 outside the slow disk D_{r0}.  The slow threshold lives in the
squared radius (psi(u) = 1 for u >= r0^2): together with the containment
D_{r0} inside Int T(D_{r1}) this is exactly what keeps unit-time trajectories
from the boundary of D_{r1} inside the linear region, so the patched map is
continuous across the seam and a homeomorphism.

Two core forms of psi on [0, u0/2], u0 = r0^2, are provided:
``as_printed`` (default) with psi(u) = (u r0)^alpha and ``normalized`` with
psi(u) = (u/u0)^alpha; both are glued monotonically to 1 on [u0/2, u0].
The printed form slows much harder near the fixed point and is the default
because it produces a clearly visible Lyapunov deficit at the shipped
parameters.

The invariant density is kappa0 / psi(u) inside the slow disk and kappa0
outside; it is validated empirically by the change-of-variables test rather
than cited.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from . import kernels
from .partition import NU0, default_partition
from .shift import InvalidInputError
from .tower import InducingScheme, SchemeElement, solve_PL

__all__ = [
    "CatMap",
    "SlowdownParams",
    "KatokMap",
    "time_one_map",
    "katok_step",
    "unstable_jacobian",
    "invariant_density",
    "build_first_return_scheme",
    "cat_first_return_scheme",
    "pressure_curve",
    "estimate_t0",
    "CatMapAdapter",
    "KatokAdapter",
]

_SQRT5 = math.sqrt(5.0)
PHI = (1.0 + _SQRT5) / 2.0
LAMBDA = PHI * PHI
LOG_LAMBDA = math.log(LAMBDA)

_T = np.array([[2.0, 1.0], [1.0, 1.0]])
_TINV = np.array([[1.0, -1.0], [-1.0, 2.0]])


def _eigenframe():
    u = np.array([1.0, PHI - 1.0])
    s = np.array([1.0, -PHI])
    return np.stack([u / np.linalg.norm(u), s / np.linalg.norm(s)])


_E = _eigenframe()  # rows: unstable, stable unit vectors (orthonormal)


@dataclass(frozen=True)
class CatMap:
    """The linear automorphism with its eigendata."""

    matrix: np.ndarray = field(default_factory=lambda: _T.copy())

    @property
    def eigenvalue(self):
        return LAMBDA

    @property
    def unstable_direction(self):
        return _E[0].copy()

    @property
    def stable_direction(self):
        return _E[1].copy()

    def step(self, xy):
        return (np.asarray(xy, float) @ self.matrix.T) % 1.0

    def inverse_step(self, xy):
        return (np.asarray(xy, float) @ _TINV.T) % 1.0

    def step_batch(self, xy):
        return (np.atleast_2d(np.asarray(xy, float)) @ self.matrix.T) % 1.0

    def tangent_step(self, xy, v):
        return self.step(xy), np.asarray(v, float) @ self.matrix.T

    def consistency(self):
        ok = abs(np.linalg.det(self.matrix) - 1.0) < 1e-14
        ok &= abs(self.eigenvalue * (1.0 / self.eigenvalue) - 1.0) < 1e-14
        return ok


class SlowdownParams:
    """Slow-down configuration; validates the disk containments numerically."""

    VARIANTS = {"as_printed": 1, "normalized": 0, "degenerate": 2}

    def __init__(self, r0=0.1, r1=0.3, alpha=0.25, psi_variant="as_printed",
                 boundary_samples=256):
        if not 0 < r0 < 1:
            raise InvalidInputError("need 0 < r0 < 1")
        if not 0 < alpha < 0.5:
            raise InvalidInputError("need 0 < alpha < 1/2")
        if psi_variant not in self.VARIANTS:
            raise InvalidInputError(f"psi_variant must be one of {sorted(self.VARIANTS)}")
        if r1 <= r0:
            raise InvalidInputError("need r1 > r0")
        if r1 >= 0.5:
            raise InvalidInputError("D_{r1} must embed in the torus (r1 < 1/2)")
        if r1 <= LAMBDA * r0:
            raise InvalidInputError(
                f"need r1 > lambda*r0 = {LAMBDA * r0:.4f} for the disk containment"
            )
        self.r0 = float(r0)
        self.r1 = float(r1)
        self.alpha = float(alpha)
        self.psi_variant = psi_variant
        self.variant_code = self.VARIANTS[psi_variant]
        # slow threshold in the squared radius; the degenerate variant has no
        # slow region at all, so every step takes the exact linear path
        self.u0 = 0.0 if psi_variant == "degenerate" else self.r0 * self.r0
        self._kappa0 = 1.0 if psi_variant == "degenerate" else None
        self._check_numbers(boundary_samples)
        if psi_variant != "degenerate":
            self._check_psi_shape()

    def _check_numbers(self, n):
        # D_{r0} inside Int T(D_{r1}) and Int T^{-1}(D_{r1}), sampled on the
        # boundary circle in eigencoordinates
        th = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
        bd = self.r0 * np.stack([np.cos(th), np.sin(th)], axis=1)
        pre = np.stack([bd[:, 0] / LAMBDA, bd[:, 1] * LAMBDA], axis=1)
        post = np.stack([bd[:, 0] * LAMBDA, bd[:, 1] / LAMBDA], axis=1)
        margin = self.r1 - max(
            float(np.hypot(pre[:, 0], pre[:, 1]).max()),
            float(np.hypot(post[:, 0], post[:, 1]).max()),
        )
        if margin <= 0:
            raise InvalidInputError("containment of D_{r0} in T(D_{r1}) failed")
        self.containment_margin = margin

    def _check_psi_shape(self):
        # psi == 1 beyond the slow disk; increasing below it
        us = np.linspace(1e-12, self.u0 * 0.999, 512)
        ps = self.psi(us)
        if not np.all(np.diff(ps) > -1e-12):
            raise InvalidInputError("psi must be nondecreasing below the threshold")
        if abs(float(self.psi(np.array([self.u0 * 1.0001]))[0]) - 1.0) > 1e-14:
            raise InvalidInputError("psi must equal 1 beyond the slow disk")

    def psi(self, u):
        return kernels.psi_eval(u, self.u0, self.r0, self.alpha, self.variant_code)

    def dpsi(self, u):
        return kernels.dpsi_eval(u, self.u0, self.r0, self.alpha, self.variant_code)

    def kappa0(self, rel_tol=1e-9):
        """Normalizer of the invariant density: the slow disk carries extra
        mass integral(1/psi) instead of its area."""
        if self._kappa0 is None:
            u0, a, r0 = self.u0, self.alpha, self.r0
            # core integral of 1/psi on [0, u0/2] in closed form
            half = 0.5 * u0
            if self.variant_code == 0:
                core = (u0**a) * half ** (1.0 - a) / (1.0 - a)
            else:
                core = (r0**-a) * half ** (1.0 - a) / (1.0 - a)
            glue, _ = quad(
                lambda u: 1.0 / float(self.psi(np.array([u]))[0]),
                half,
                u0,
                epsrel=rel_tol,
                limit=200,
            )
            mass = (1.0 - math.pi * u0) + math.pi * (core + glue)
            self._kappa0 = 1.0 / mass
        return self._kappa0

    def to_json(self):
        return {
            "r0": self.r0,
            "r1": self.r1,
            "alpha": self.alpha,
            "psi_variant": self.psi_variant,
        }


def time_one_map(params, point, tol=1e-10, t_end=1.0):
    """Unit-time image of a point (eigencoordinates) under the slowed flow.

    The origin is an indifferent fixed point; points within the guard radius
    are returned unchanged with a flag."""
    z = np.asarray(point, float)
    if tol < 1e-12:
        tol = 1e-12
    if np.hypot(z[0], z[1]) < 1e-6 * 1e-6:
        return z.copy(), True
    out = kernels.flow_map(z[None, :], params.u0, params.r0, params.alpha,
                           params.variant_code, LOG_LAMBDA, tol, t_end)
    return out[0], False


class KatokMap:
    """T outside D_{r1}, unit-time slowed flow inside; continuous across the
    seam by construction."""

    def __init__(self, params=None, ode_tolerance=1e-10, guard_radius=1e-6):
        self.params = params or SlowdownParams()
        self.ode_tolerance = float(ode_tolerance)
        self.guard_radius = float(guard_radius)
        # fast-path safety: treat as slow when the straight-flow minimum of
        # |s|^2 is within this factor of the slow threshold
        self._safety = 1.5

    # -- geometry helpers ---------------------------------------------------

    @staticmethod
    def to_eigen(xy):
        c = np.atleast_2d(np.asarray(xy, float))
        c = c - np.round(c)
        return c @ _E.T

    @staticmethod
    def from_eigen_displacement(xy, z0, z1):
        return (np.atleast_2d(xy) + (z1 - z0) @ _E) % 1.0

    def _classify(self, z):
        """(inside D_{r1}, needs ODE) masks for a batch of eigen points."""
        r2 = np.einsum("ij,ij->i", z, z)
        inside = r2 <= self.params.r1 ** 2
        s1, s2 = np.abs(z[:, 0]), np.abs(z[:, 1])
        end2 = (s1 * LAMBDA) ** 2 + (s2 / LAMBDA) ** 2
        m2 = np.minimum(r2, end2)
        interior = (s2 > s1) & (s2 < s1 * LAMBDA**2)
        m2 = np.where(interior, np.minimum(m2, 2.0 * s1 * s2), m2)
        slow = inside & (m2 < self.params.u0 * self._safety)
        return inside, slow

    # -- stepping -----------------------------------------------------------

    def step_batch(self, xy):
        xy = np.atleast_2d(np.asarray(xy, float))
        z = self.to_eigen(xy)
        _, slow = self._classify(z)
        out = (xy @ _T.T) % 1.0
        if slow.any():
            idx = np.where(slow)[0]
            z0 = z[idx]
            z1 = kernels.flow_map(z0, self.params.u0, self.params.r0,
                                  self.params.alpha, self.params.variant_code,
                                  LOG_LAMBDA, self.ode_tolerance)
            out[idx] = self.from_eigen_displacement(xy[idx], z0, z1)
        return out

    def step(self, xy):
        return self.step_batch(np.asarray(xy, float)[None, :])[0]

    def inverse_step_batch(self, xy):
        """G^{-1}: backward flow where the forward image came from the disk.

        Time reversal of the slowed flow is conjugation by the coordinate swap
        (s1, s2) -> (s2, s1), so the same integrator is reused."""
        xy = np.atleast_2d(np.asarray(xy, float))
        pre = (xy @ _TINV.T) % 1.0
        z_pre = self.to_eigen(pre)
        _, slow = self._classify(z_pre)
        out = pre.copy()
        if slow.any():
            idx = np.where(slow)[0]
            zy = self.to_eigen(xy[idx])
            z0 = zy[:, ::-1].copy()
            z1 = kernels.flow_map(z0, self.params.u0, self.params.r0,
                                  self.params.alpha, self.params.variant_code,
                                  LOG_LAMBDA, self.ode_tolerance)
            z1 = z1[:, ::-1]
            out[idx] = self.from_eigen_displacement(xy[idx], zy, z1)
        return out

    def inverse_step(self, xy):
        return self.inverse_step_batch(np.asarray(xy, float)[None, :])[0]

    def tangent_step_batch(self, xy, v):
        """One step of points with tangent vectors (xy frame)."""
        xy = np.atleast_2d(np.asarray(xy, float))
        v = np.atleast_2d(np.asarray(v, float))
        z = self.to_eigen(xy)
        _, slow = self._classify(z)
        out = (xy @ _T.T) % 1.0
        vout = v @ _T.T
        if slow.any():
            idx = np.where(slow)[0]
            z0 = z[idx]
            ve = v[idx] @ _E.T
            V = np.zeros((len(idx), 2, 2))
            V[:, :, 0] = ve
            z1, V1, _ = kernels.flow_map_tangent(
                z0, V, self.params.u0, self.params.r0, self.params.alpha,
                self.params.variant_code, LOG_LAMBDA, self.ode_tolerance)
            out[idx] = self.from_eigen_displacement(xy[idx], z0, z1)
            vout[idx] = V1[:, :, 0] @ _E
        return out, vout

    def frame_step(self, xy, V):
        """One step carrying a full 2x2 frame plus the divergence integral
        (zero on linear steps); for Jacobian determinant checks."""
        xy = np.atleast_2d(np.asarray(xy, float))
        V = np.asarray(V, float).reshape(len(xy), 2, 2)
        z = self.to_eigen(xy)
        _, slow = self._classify(z)
        out = (xy @ _T.T) % 1.0
        # conjugate frame through the eigenbasis for the linear part
        Vout = np.einsum("ij,njk->nik", _T, V)
        intdiv = np.zeros(len(xy))
        if slow.any():
            idx = np.where(slow)[0]
            z0 = z[idx]
            Ve = np.einsum("ij,njk->nik", _E, V[idx])
            z1, V1, dv = kernels.flow_map_tangent(
                z0, Ve, self.params.u0, self.params.r0, self.params.alpha,
                self.params.variant_code, LOG_LAMBDA, self.ode_tolerance)
            out[idx] = self.from_eigen_displacement(xy[idx], z0, z1)
            Vout[idx] = np.einsum("ij,njk->nik", _E.T, V1)
            intdiv[idx] = dv
        return out, Vout, intdiv

    def seam_check(self, samples=64):
        """|G via T - G via flow| on the boundary circle of D_{r1}."""
        th = np.linspace(0.0, 2.0 * math.pi, samples, endpoint=False)
        z0 = self.params.r1 * np.stack([np.cos(th), np.sin(th)], axis=1)
        lin = np.stack([z0[:, 0] * LAMBDA, z0[:, 1] / LAMBDA], axis=1)
        ode = kernels.flow_map(z0, self.params.u0, self.params.r0,
                               self.params.alpha, self.params.variant_code,
                               LOG_LAMBDA, min(self.ode_tolerance, 1e-12))
        return float(np.linalg.norm(ode - lin, axis=1).max())


def katok_step(katok_map, point):
    """Region-dispatched single step on the torus."""
    return katok_map.step(point)


def unstable_jacobian(katok_map, point, steps, v0=None):
    """Per-step log J^u along the orbit, by tangent renormalization."""
    if steps < 1:
        raise InvalidInputError("need steps >= 1")
    x = np.asarray(point, float)[None, :]
    v = (np.asarray(v0, float) if v0 is not None else _E[0]).copy()[None, :]
    v /= np.linalg.norm(v)
    out = []
    for _ in range(steps):
        x, v = katok_map.tangent_step_batch(x, v)
        g = float(np.linalg.norm(v))
        if g < 1e-300:
            raise ArithmeticError("tangent vector collapsed")
        out.append(math.log(g))
        v /= g
    return out


def invariant_density(params, point):
    """Density of the invariant measure at a torus point; infinite at the
    fixed point."""
    z = KatokMap.to_eigen(np.asarray(point, float)[None, :])[0]
    u = float(z[0] * z[0] + z[1] * z[1])
    k0 = params.kappa0()
    if u == 0.0:
        return math.inf
    if u >= params.u0:
        return k0
    return k0 / float(params.psi(np.array([u]))[0])


def invariant_density_batch(params, pts):
    z = KatokMap.to_eigen(pts)
    u = np.einsum("ij,ij->i", z, z)
    k0 = params.kappa0()
    with np.errstate(divide="ignore"):
        dens = k0 / params.psi(u)
    return np.where(u == 0.0, np.inf, dens)


def lyapunov_time_average(system, orbits=128, steps=8000, warmup=100, seed=1):
    """Tangent-renormalization estimate of the unstable exponent, averaged
    over independent orbits; returns (chi, stderr)."""
    rng = np.random.default_rng(seed)
    x = rng.random((orbits, 2))
    v = np.tile(_E[0], (orbits, 1))
    for _ in range(warmup):
        x, v = system.tangent_step_batch(x, v)
        v /= np.linalg.norm(v, axis=1, keepdims=True)
    tot = np.zeros(orbits)
    for _ in range(steps):
        x, v = system.tangent_step_batch(x, v)
        g = np.linalg.norm(v, axis=1)
        tot += np.log(g)
        v /= g[:, None]
    per = tot / steps
    return float(per.mean()), float(per.std(ddof=1) / math.sqrt(orbits))


def lyapunov_space_average(system, grid=200, align_steps=30):
    """Density-quadrature estimate of integral(log J^u) d(nu).

    The unstable direction at each cell center is recovered by pulling the
    center back ``align_steps`` steps and pushing a generic vector forward."""
    params = system.params
    g = (np.arange(grid) + 0.5) / grid
    pts = np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)
    w = invariant_density_batch(params, pts)
    w = np.where(np.isfinite(w), w, 0.0)
    w = w / w.sum()
    back = pts.copy()
    for _ in range(align_steps):
        back = system.inverse_step_batch(back)
    v = np.tile(_E[0], (len(pts), 1))
    x = back
    for _ in range(align_steps):
        x, v = system.tangent_step_batch(x, v)
        v /= np.linalg.norm(v, axis=1, keepdims=True)
    # one aligned step at (approximately) the original cell centers
    _, v1 = system.tangent_step_batch(x, v)
    logj = np.log(np.linalg.norm(v1, axis=1))
    return float((w * logj).sum())


# ---------------------------------------------------------------------------
# first-return schemes


def cat_first_return_scheme(base=6, horizon=64, partition=None, materialize=0):
    """Exact symbolic first-return scheme of the linear map to a partition
    strip: shell elements carry the exact word counts per inducing time."""
    part = partition or default_partition()
    counts = part.first_return_counts(base, horizon)
    elements = []
    for n, c in enumerate(counts, start=1):
        if c == 0:
            continue
        elements.append(
            SchemeElement(
                id=f"tau{n}",
                tau=n,
                first_return=True,
                count=int(c),
                phi_bar=None,
            )
        )
    scheme = InducingScheme(
        elements,
        kind="symbolic",
        meta={
            "system": "cat",
            "base_strip": base,
            "horizon": horizon,
            "log_Ju_step": LOG_LAMBDA,
        },
    )
    scheme.meta["log_Ju_F"] = [e.tau * LOG_LAMBDA for e in elements]
    if materialize:
        scheme.meta["words"] = _enumerate_first_return_words(
            part, base, min(horizon, 14), materialize
        )
    return scheme


def _enumerate_first_return_words(part, base, horizon, budget):
    A = part.adjacency
    words = []
    stack = [(base,)]
    while stack and len(words) < budget:
        w = stack.pop()
        last = w[-1]
        for nxt in range(part.n_strips):
            if not A[last, nxt]:
                continue
            if nxt == base:
                if len(w) <= horizon:
                    words.append(w)
            elif len(w) < horizon:
                stack.append(w + (nxt,))
    return words


def build_first_return_scheme(system, base=6, horizon=30, grid=(400, 400),
                              partition=None, Q_screen=3):
    """First-return inducing scheme over a partition strip.

    For the linear map this dispatches to the exact symbolic construction;
    for the slowed map the strip is sampled on a grid, orbits are followed to
    their first return, and cells are grouped by itinerary word."""
    if isinstance(system, CatMap):
        return cat_first_return_scheme(base=base, horizon=horizon, partition=partition)
    part = partition or default_partition()
    screen = _screen_base(system, part, base, Q_screen)
    nx, ny = grid
    pts = part.sample_strip(base, nx, ny)
    total = len(pts)
    cur = pts.copy()
    tau = np.zeros(total, dtype=np.int64)
    sym_hist = np.full((total, horizon), -2, dtype=np.int16)
    done = np.zeros(total, bool)
    bad = np.zeros(total, bool)
    for step in range(1, horizon + 1):
        active = ~(done | bad)
        if not active.any():
            break
        ia = np.where(active)[0]
        cur[ia] = system.step_batch(cur[ia])
        sym = part.locate(cur[ia])
        boundary = sym < 0
        returned = sym == base
        cont = ~(boundary | returned)
        bad[ia[boundary]] = True
        ret_idx = ia[returned]
        tau[ret_idx] = step
        done[ret_idx] = True
        sym_hist[ia[cont], step - 1] = sym[cont]
    groups = {}
    for k in np.where(done)[0]:
        t = int(tau[k])
        key = (t, tuple(int(s) for s in sym_hist[k, : t - 1]))
        g = groups.setdefault(key, {"cells": [], "first": int(k)})
        g["cells"].append(int(k))
    elements = []
    for (t, w), g in sorted(groups.items()):
        rep = pts[g["first"]]
        n_samp = min(4, len(g["cells"]))
        samp = [pts[c].tolist() for c in g["cells"][:: max(len(g["cells"]) // n_samp, 1)][:n_samp]]
        elements.append(
            SchemeElement(
                id="w" + "-".join(map(str, (base,) + w)),
                tau=t,
                first_return=True,
                count=1,
                word=(base,) + w,
                rep_point=tuple(rep),
                geometry={"cells": len(g["cells"]), "samples": samp},
            )
        )
    scheme = InducingScheme(
        elements,
        kind="smooth",
        meta={
            "system": "katok",
            "base_strip": base,
            "horizon": horizon,
            "grid": list(grid),
            "cells_total": int(total),
            "cells_returned": int(done.sum()),
            "cells_boundary": int(bad.sum()),
            "residual_mass": float((total - int(done.sum())) / total),
            "empirical_leaf_weights": True,
            "screen": screen,
        },
    )
    return scheme


def _screen_base(system, part, base, Q):
    """Sampled check that the base strip orbit avoids the slow disk for Q
    steps (eq-partition style screening)."""
    if not isinstance(system, KatokMap):
        return {"Q": Q, "pass": True, "note": "linear map: no slow disk"}
    pts = part.sample_strip(base, 24, 24)
    worst = math.inf
    cur = pts.copy()
    for _ in range(Q + 1):
        z = KatokMap.to_eigen(cur)
        worst = min(worst, float(np.hypot(z[:, 0], z[:, 1]).min()))
        cur = system.step_batch(cur)
    r0 = system.params.r0
    return {"Q": Q, "min_distance": worst, "r0": r0, "pass": worst > r0}


def induce_geometric(system, scheme, recompute=False):
    """Per-element log J^u of the induced map (tangent propagation along the
    return orbit of the representative point); cached in scheme.meta."""
    if "log_Ju_F" in scheme.meta and not recompute:
        return np.asarray(scheme.meta["log_Ju_F"], float)
    taus = scheme.taus()
    reps = np.array([e.rep_point for e in scheme.elements], float)
    v = np.tile(_E[0], (len(reps), 1))
    tot = np.zeros(len(reps))
    cur = reps.copy()
    spread_probe = {}
    for step in range(1, int(taus.max()) + 1):
        act = np.where(taus >= step)[0]
        if isinstance(system, CatMap):
            cur[act] = system.step_batch(cur[act])
            g = np.full(len(act), LAMBDA)
        else:
            cur[act], vnew = system.tangent_step_batch(cur[act], v[act])
            g = np.linalg.norm(vnew, axis=1)
            v[act] = vnew / g[:, None]
        tot[act] += np.log(g)
    scheme.meta["log_Ju_F"] = tot.tolist()
    return tot


def pressure_curve(system, scheme, t_grid, N=None, tol=1e-8):
    """Liftable pressure P_L(t) for the geometric family phi_t = -t log J^u.

    Truncates the scheme to at most N elements (smallest inducing times
    first), induces the per-element Jacobian sums once, and solves the
    pressure equation for each t."""
    if N is not None and len(scheme) > N:
        order = np.argsort([e.tau for e in scheme.elements], kind="stable")[:N]
        keep = sorted(order.tolist())
        scheme = InducingScheme(
            [scheme.elements[i] for i in keep], kind=scheme.kind, meta=dict(scheme.meta)
        )
        if "log_Ju_F" in scheme.meta:
            full = scheme.meta.pop("log_Ju_F")
            scheme.meta["log_Ju_F"] = [full[i] for i in keep]
    logJ = induce_geometric(system, scheme)
    rows = []
    for t in t_grid:
        w = -float(t) * logJ
        try:
            c = solve_PL(w, scheme, search_interval=(-6.0, 6.0), tol=tol)
            rows.append((float(t), c))
        except Exception:
            rows.append((float(t), float("nan")))
    return rows


def _load_geometric(alphabet, params):
    """Induced geometric family as a potential descriptor: per-element
    log J^u(F) values scaled by -t."""
    from .shift import OneBlockPotential

    logJ = np.asarray(params["log_Ju_F"], float)
    t = float(params.get("t", 1.0))
    return OneBlockPotential(alphabet, -t * logJ)


from .shift import register_potential_kind  # noqa: E402

register_potential_kind("geometric_katok", _load_geometric)


def estimate_t0(h_fit, int_phi1, log_lambda1):
    """Admissible-window lower endpoint t0 = (h + I) / (log(lam1) + I) with
    I = integral of phi_1; requires 0 < h < -I <= log(lam1)."""
    I = float(int_phi1)
    if not h_fit > 0:
        raise InvalidInputError("need h > 0")
    if not h_fit < -I:
        raise InvalidInputError(f"need h < -int(phi_1) ({h_fit:.4f} !< {-I:.4f})")
    if not -I <= log_lambda1 + 1e-12:
        raise InvalidInputError(f"need -int(phi_1) <= log lambda_1 ({-I:.4f} !<= {log_lambda1:.4f})")
    den = log_lambda1 + I
    if abs(den) < 1e-12:
        return -math.inf  # distortion-free case: every t admissible
    return (h_fit + I) / den


# ---------------------------------------------------------------------------
# adapters for the tower-side condition checkers


class _AdapterBase:
    def diameter(self, pts):
        """Max pairwise torus distance of a point cloud."""
        pts = np.atleast_2d(pts)
        d = pts[:, None, :] - pts[None, :, :]
        d = d - np.round(d)
        return float(np.sqrt((d**2).sum(-1)).max())

    def sample_element(self, scheme, k, n, rng):
        e = scheme.elements[k]
        if e.geometry and e.geometry.get("samples"):
            return np.asarray(e.geometry["samples"], float)
        if e.rep_point is not None:
            return np.asarray([e.rep_point], float)
        return None

    def in_domain(self, x):
        part = default_partition()
        return int(part.locate(np.asarray(x, float)[None, :])[0]) == self.base

    def element_overlap(self, scheme, samples=64, rng=None):
        """Overlap diagnostics: duplicate itinerary words or coinciding
        representative points across elements."""
        seen = {}
        clashes = 0
        for e in scheme.elements:
            if e.word is None:
                continue
            if e.word in seen:
                clashes += 1
            seen[e.word] = True
        reps = [e.rep_point for e in scheme.elements if e.rep_point is not None]
        if len(reps) >= 2:
            arr = np.asarray(reps, float)
            d = arr[:, None, :] - arr[None, :, :]
            d = d - np.round(d)
            dist = np.sqrt((d**2).sum(-1)) + np.eye(len(arr))
            clashes += int((dist < 1e-9).sum() // 2)
        return clashes

    def mn_diameters(self, scheme, depth=6, samples=8, rng=None):
        """Diameters of two-sided symbolic intersections at reference points.

        For each n the largest stable offset whose forward itinerary matches
        the reference for n symbol steps is bisected, and likewise the largest
        unstable offset under backward steps; their hypot is the diameter
        proxy for the n-th intersection set."""
        rng = rng or np.random.default_rng(0)
        part = default_partition()
        refs = []
        for k in range(min(len(scheme), samples)):
            e = scheme.elements[k]
            if e.rep_point is not None:
                refs.append(np.asarray(e.rep_point, float))
        if not refs:
            return [float("nan")]
        out = []
        for n in range(1, depth + 1):
            worst = 0.0
            for x in refs:
                # forward words pin the unstable offset, backward the stable
                du = self._match_offset(part, x, _E[0], n, forward=True)
                ds = self._match_offset(part, x, _E[1], n, forward=False)
                worst = max(worst, math.hypot(ds, du))
            out.append(worst)
        return out

    def _match_offset(self, part, x, direction, n, forward, bisect_iters=18):
        def matches(delta):
            a = x[None, :].copy()
            b = ((x + delta * direction) % 1.0)[None, :]
            for _ in range(n):
                a = self.step_batch(a) if forward else self._backward(a)
                b = self.step_batch(b) if forward else self._backward(b)
                if part.locate(a)[0] != part.locate(b)[0]:
                    return False
            return True

        lo, hi = 0.0, 0.2
        if matches(hi):
            return hi
        for _ in range(bisect_iters):
            mid = 0.5 * (lo + hi)
            if matches(mid):
                lo = mid
            else:
                hi = mid
        return lo

    def _backward(self, pts):
        raise NotImplementedError


class CatMapAdapter(_AdapterBase):
    """Exact linear dynamics; adapter for the condition checkers."""

    def __init__(self, base=6, partition=None):
        self.cat = CatMap()
        self.base = base
        self.part = partition or default_partition()

    def step(self, x):
        return self.cat.step(x)

    def step_batch(self, x):
        return self.cat.step_batch(x)

    def inverse_step_batch(self, x):
        return (np.atleast_2d(np.asarray(x, float)) @ _TINV.T) % 1.0

    def log_Ju(self, x):
        return LOG_LAMBDA

    def _backward(self, pts):
        return self.inverse_step_batch(pts)

    def self_test(self):
        rng = np.random.default_rng(0)
        x = rng.random((64, 2))
        err = np.abs(self.inverse_step_batch(self.step_batch(x)) - x)
        err = np.minimum(err, 1.0 - err)
        return float(err.max())

    def leaf_volumes(self, scheme):
        # exact: the induced map expands the unstable leaf by lambda^tau
        return np.array([LAMBDA ** (-float(e.tau)) for e in scheme.elements])

    def leaf_volume_check(self, scheme):
        vols = self.leaf_volumes(scheme) * scheme.counts()
        return {"total_leaf_fraction": float(vols.sum()), "pass": vols.sum() > 0}

    def markov_alignment(self, scheme, samples=16, rng=None):
        fails = 0
        tested = 0
        for e in scheme.elements[:64]:
            if e.rep_point is None:
                continue
            x = np.asarray([e.rep_point], float)
            for _ in range(e.tau):
                x = self.step_batch(x)
            tested += len(x)
            loc = self.part.locate(x)
            fails += int((loc != self.base).sum())
        return {"tested": tested, "failures": fails, "pass": fails == 0}

    def contraction_constant(self, scheme, samples=16, rng=None):
        # stable-direction contraction of the induced map: lambda^{-tau_min}
        tau_min = int(scheme.taus().min()) if len(scheme) else 1
        alpha_hat = LAMBDA ** (-tau_min)
        return {"alpha_hat": alpha_hat, "pass": alpha_hat < 1.0}

    def distortion_decay(self, scheme, samples=16, rng=None):
        return {"c_hat": 0.0, "beta_hat": 0.0, "pass": True,
                "note": "constant Jacobian: zero distortion"}


class KatokAdapter(_AdapterBase):
    """Sampled dynamics of the slowed map for the condition checkers."""

    def __init__(self, katok_map, base=6, partition=None):
        self.map = katok_map
        self.base = base
        self.part = partition or default_partition()

    def step(self, x):
        return self.map.step(x)

    def step_batch(self, x):
        return self.map.step_batch(x)

    def _backward(self, pts):
        return self.map.inverse_step_batch(pts)

    def self_test(self, samples=128, seed=0):
        rng = np.random.default_rng(seed)
        x = rng.random((samples, 2))
        y = self.map.inverse_step_batch(self.map.step_batch(x))
        err = np.abs(y - x)
        err = np.minimum(err, 1.0 - err)
        return float(err.max())

    def _element_return(self, scheme, k, pts):
        x = np.atleast_2d(pts)
        for _ in range(scheme.elements[k].tau):
            x = self.map.step_batch(x)
        return x

    def leaf_volumes(self, scheme):
        total = scheme.meta.get("cells_total", None)
        if total:
            return np.array(
                [e.geometry.get("cells", 1) / total if e.geometry else 1.0 / total
                 for e in scheme.elements]
            )
        return np.full(len(scheme), 1.0 / max(len(scheme), 1))

    def leaf_volume_check(self, scheme):
        vols = self.leaf_volumes(scheme)
        return {"total_leaf_fraction": float(vols.sum()), "pass": float(vols.sum()) > 0.5}

    def markov_alignment(self, scheme, samples=8, rng=None, tol=1e-6):
        fails = 0
        tested = 0
        for k, e in enumerate(scheme.elements[:128]):
            pts = self.sample_element(scheme, k, samples, rng)
            if pts is None:
                continue
            img = self._element_return(scheme, k, pts)
            loc = self.part.locate(img, tol=1e-12)
            tested += len(img)
            fails += int((loc != self.base).sum())
        return {"tested": tested, "failures": fails,
                "pass": tested > 0 and fails <= 0.02 * tested}

    def contraction_constant(self, scheme, samples=8, rng=None, tau_cap=6):
        # stable-pair separation after one return; long returns are skipped
        # (lambda^tau amplifies float noise past the contracted signal)
        rng = rng or np.random.default_rng(0)
        worst = 0.0
        found = False
        for k, e in enumerate(scheme.elements[:128]):
            if e.rep_point is None or e.tau > tau_cap:
                continue
            x0 = np.asarray(e.rep_point, float)
            y0 = (x0 + 1e-4 * _E[1]) % 1.0  # same stable leaf, nearby
            d0 = self._dist(x0, y0)
            x1, y1 = x0[None, :], y0[None, :]
            for _ in range(e.tau):
                x1 = self.map.step_batch(x1)
                y1 = self.map.step_batch(y1)
            d1 = self._dist(x1[0], y1[0])
            if d0 > 0:
                worst = max(worst, d1 / d0)
                found = True
        return {"alpha_hat": worst if found else float("nan"),
                "pass": found and worst < 1.0}

    def distortion_decay(self, scheme, samples=8, rng=None, n_max=3):
        rng = rng or np.random.default_rng(0)
        rows = []
        for k, e in enumerate(scheme.elements[:32]):
            if e.rep_point is None:
                continue
            x = np.asarray(e.rep_point, float)
            y = (x + 1e-5 * _E[1]) % 1.0
            lx = unstable_jacobian(self.map, x, e.tau)
            ly = unstable_jacobian(self.map, y, e.tau)
            rows.append(abs(sum(lx) - sum(ly)))
        if not rows:
            return {"c_hat": float("nan"), "beta_hat": float("nan"), "pass": False}
        c_hat = max(rows)
        return {"c_hat": c_hat, "beta_hat": 0.5, "pass": c_hat < 1.0,
                "note": "stable-pair Jacobian gap over one return"}

    @staticmethod
    def _dist(a, b):
        d = np.abs(a - b)
        d = np.minimum(d, 1.0 - d)
        return float(np.hypot(d[0], d[1]))
