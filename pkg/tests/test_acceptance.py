"""Acceptance suite: one test per criterion, at the stated tolerances.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
PASS/FAIL lines and timings."""

import math
import time

import numpy as np
import pytest

from tower_thermo import kernels
from tower_thermo.cohomology import reduce_to_one_sided
from tower_thermo.katok import (
    LAMBDA,
    LOG_LAMBDA,
    CatMap,
    KatokAdapter,
    KatokMap,
    SlowdownParams,
    build_first_return_scheme,
    cat_first_return_scheme,
    invariant_density_batch,
    lyapunov_space_average,
    lyapunov_time_average,
    pressure_curve,
)
from tower_thermo.liftability import binomial_bound_check, count_profile
from tower_thermo.pressure import (
    gibbs_measure,
    pressure_periodic,
    pressure_spectral,
    verify_gibbs,
)
from tower_thermo.shift import (
    Alphabet,
    ConstantPotential,
    PeriodicSequence,
    TabulatedPotential,
    TwoBlockPotential,
    birkhoff_sum,
)
from tower_thermo.stats import (
    birkhoff_replica_factory,
    clt_check,
    correlations_markov,
    correlations_orbit,
    fit_decay,
    initial_decay_window,
    markov_chain_sampler,
)
from tower_thermo.tower import InducingScheme, SchemeElement, TowerMeasure, abramov_kac_check


def report(num, ok, detail, t0, budget):
    dt = time.time() - t0
    line = f"ACCEPTANCE {num:2d}: {'PASS' if ok else 'FAIL'} ({dt:6.1f}s / {budget}s budget) {detail}"
    print(line)
    assert ok, line
    assert dt < budget, f"criterion {num} exceeded its runtime budget: {line}"


def itertools_words(N, n):
    import itertools

    return itertools.product(range(N), repeat=n)


class TestAcceptance:
    def test_01_pressure_oracle(self):
        t0 = time.time()
        worst = 0.0
        for N in (2, 3, 5):
            phi = ConstantPotential(Alphabet(N), 0.0)
            p1 = pressure_periodic(phi, b=0, n_max=12).estimate
            p2 = pressure_spectral(phi).estimate
            worst = max(worst, abs(p1 - math.log(N)), abs(p2 - math.log(N)))
        report(1, worst <= 1e-6, f"max deviation from log N: {worst:.2e}", t0, 5)

    def test_02_cohomology(self):
        t0 = time.time()
        g = np.array([0.4, -0.3, 0.9])
        A3 = Alphabet(3)
        phi = TabulatedPotential(A3, g, lo=-1)
        psi = reduce_to_one_sided(phi)
        tail2 = psi.truncation_error

        exact_err = max(
            abs(psi.value(PeriodicSequence(w)) - g[w[0]])
            for w in [(0,), (1, 2), (2, 0, 1), (1, 1, 0, 2)]
        )
        ok = exact_err <= 1e-12

        worst_gap = 0.0
        for n in range(1, 11):
            for w in itertools_words(3, n):
                a = PeriodicSequence(w)
                gap = abs(birkhoff_sum(phi, a, n) - birkhoff_sum(psi, a, n))
                worst_gap = max(worst_gap, gap)
        ok &= worst_gap <= max(2.0 * tail2, 1e-12)

        p_phi = pressure_periodic(phi, b=0, n_max=8).estimate
        p_psi = pressure_periodic(psi, b=0, n_max=8).estimate
        ok &= abs(p_phi - p_psi) <= 1e-6
        report(
            2,
            ok,
            f"reduce err {exact_err:.1e}, periodic gap {worst_gap:.1e}, "
            f"pressure gap {abs(p_phi - p_psi):.1e}",
            t0,
            10,
        )

    def test_03_gibbs_verification(self):
        t0 = time.time()
        rng = np.random.default_rng(2024)
        ok = True
        worst_c0 = 1.0
        for trial in range(20):
            N = int(rng.integers(2, 5))
            phi = TwoBlockPotential(Alphabet(N), rng.uniform(-0.5, 0.5, size=(N, N)))
            P = pressure_spectral(phi).estimate
            m = gibbs_measure(phi)
            rep = verify_gibbs(m, phi, P, L=6)
            ok &= math.isfinite(rep.C0_observed)
            worst_c0 = max(worst_c0, rep.C0_observed)
        # planted-wrong-pressure control: growth slope vs the planted offset
        phi = TwoBlockPotential(Alphabet(3), rng.uniform(-0.5, 0.5, size=(3, 3)))
        P = pressure_spectral(phi).estimate
        m = gibbs_measure(phi)
        good = verify_gibbs(m, phi, P, L=6)
        bad = verify_gibbs(m, phi, P + 0.1, L=6)
        logs = [
            math.log(cb) - math.log(cg)
            for (_, cb), (_, cg) in zip(bad.per_length[1:], good.per_length[1:])
        ]
        slope = float(np.polyfit(range(2, 7), logs, 1)[0])
        ok &= abs(slope - 0.1) <= 0.01
        report(3, ok, f"worst C0 {worst_c0:.3g}, planted slope {slope:.4f}", t0, 30)

    def test_04_abramov_kac(self):
        t0 = time.time()
        rng = np.random.default_rng(7)
        from tower_thermo.tower import _stationary

        worst = 0.0
        for trial in range(12):
            n = int(rng.integers(2, 7))
            taus = rng.integers(1, 6, size=n).tolist()
            scheme = InducingScheme(
                [SchemeElement(id=f"J{i}", tau=t) for i, t in enumerate(taus)]
            )
            P = rng.random((n, n)) + 0.05
            P /= P.sum(axis=1, keepdims=True)
            nu = TowerMeasure(scheme, _stationary(P), P)
            phi_cells = {
                (k, lvl): float(rng.normal())
                for k, e in enumerate(scheme.elements)
                for lvl in range(e.tau)
            }
            out = abramov_kac_check(nu, phi_cells=phi_cells)
            worst = max(
                worst,
                out["abramov_residual"],
                out["kac_residual"],
                out["integral_residual"],
            )
        report(4, worst <= 1e-8, f"worst identity residual {worst:.2e}", t0, 10)

    def test_05_cat_pressure_line(self):
        t0 = time.time()
        cat = CatMap()
        scheme = cat_first_return_scheme(base=6, horizon=64)
        assert len(scheme) <= 64
        rows = pressure_curve(cat, scheme, [-0.25, 0.0, 0.25, 0.5, 0.75, 1.0])
        worst = max(abs(c - (1 - t) * LOG_LAMBDA) for t, c in rows)
        p1 = dict(rows)[1.0]
        report(
            5,
            worst <= 2e-3 and abs(p1) <= 2e-3,
            f"max |P_L(t) - (1-t)log lam| = {worst:.2e}, |P_L(1)| = {abs(p1):.2e}",
            t0,
            120,
        )

    def test_06_liftability_counts(self):
        t0 = time.time()
        els = [
            SchemeElement(id=f"tau{n}", tau=n, count=2 ** (n - 1))
            for n in range(1, 15)
        ]
        prof = count_profile(InducingScheme(els))
        ok = prof.S == [2 ** (n - 1) for n in range(1, 15)]
        ok &= abs(prof.h_fit - math.log(2)) <= 0.02
        cat_prof = count_profile(cat_first_return_scheme(base=6, horizon=40))
        ok &= cat_prof.h_fit < LOG_LAMBDA - 0.05
        report(
            6,
            ok,
            f"3-shift h_fit {prof.h_fit:.4f} (log2 = {math.log(2):.4f}), "
            f"cat h_fit {cat_prof.h_fit:.4f} < {LOG_LAMBDA - 0.05:.4f}",
            t0,
            20,
        )

    def test_07_katok_construction_sanity(self):
        t0 = time.time()
        km = KatokMap()
        # degenerate slow-down equals the linear map
        kd = KatokMap(SlowdownParams(psi_variant="degenerate"))
        cat = CatMap()
        rng = np.random.default_rng(11)
        x = rng.random((10_000, 2))
        y = x.copy()
        worst_deg = 0.0
        for _ in range(20):
            x = kd.step_batch(x)
            y = cat.step_batch(y)
            d = np.abs(x - y)
            d = np.minimum(d, 1.0 - d)
            worst_deg = max(worst_deg, float(np.hypot(d[:, 0], d[:, 1]).max()))
        ok = worst_deg <= 1e-7

        # first integral s1 s2 through the slow flow
        z0 = rng.uniform(-0.25, 0.25, size=(2000, 2))
        z1 = kernels.flow_map(z0, km.params.u0, km.params.r0, km.params.alpha,
                              km.params.variant_code, LOG_LAMBDA, 1e-10)
        first_integral = float(
            np.abs(z1[:, 0] * z1[:, 1] - z0[:, 0] * z0[:, 1]).max()
        )
        ok &= first_integral <= 1e-8

        # Liouville: frame determinant equals the divergence integral
        pts = rng.random((500, 2))
        V = np.tile(np.eye(2), (500, 1, 1))
        _, V2, dv = km.frame_step(pts, V)
        dets = V2[:, 0, 0] * V2[:, 1, 1] - V2[:, 0, 1] * V2[:, 1, 0]
        liouville = float(np.abs(dets - np.exp(dv)).max())
        ok &= liouville <= 1e-6

        # invariant density: change of variables over 100 boxes, half of them
        # near the slow disk where the density varies
        p = km.params

        def box_dev(lo, size, n=20):
            hi = lo + size
            gx = lo[0] + size[0] * (np.arange(n) + 0.5) / n
            gy = lo[1] + size[1] * (np.arange(n) + 0.5) / n
            P = np.stack(np.meshgrid(gx, gy, indexing="ij"), -1).reshape(-1, 2)
            dens = invariant_density_batch(p, P)
            a = float(dens.mean())
            pre = km.inverse_step_batch(P)
            V = np.tile(np.eye(2), (len(P), 1, 1))
            _, V2, dv = km.frame_step(pre, V)
            dets = np.abs(V2[:, 0, 0] * V2[:, 1, 1] - V2[:, 0, 1] * V2[:, 1, 0])
            b = float((invariant_density_batch(p, pre) / dets).mean())
            return abs(a - b) / abs(a)

        devs = []
        for k in range(100):
            if k < 50:
                lo = rng.uniform(-0.15, 0.1, size=2)
            else:
                lo = rng.random(2)
            devs.append(box_dev(lo % 1.0, rng.uniform(0.02, 0.07, size=2)))
        ok &= max(devs) <= 1e-3
        report(
            7,
            ok,
            f"degenerate {worst_deg:.1e}, s1s2 {first_integral:.1e}, "
            f"liouville {liouville:.1e}, invariance {max(devs):.1e}",
            t0,
            180,
        )

    def test_08_katok_lyapunov_gap(self):
        t0 = time.time()
        km = KatokMap()  # defaults r0 = 0.1, alpha = 0.25
        chi_t, se = lyapunov_time_average(km, orbits=128, steps=8000, seed=1)
        chi_s = lyapunov_space_average(km, grid=240, align_steps=30)
        agree = abs(chi_t - chi_s) / chi_t
        ok = 0.1 <= chi_t <= LOG_LAMBDA - 0.01
        ok &= 0.1 <= chi_s <= LOG_LAMBDA - 0.01
        ok &= agree <= 0.02
        report(
            8,
            ok,
            f"time {chi_t:.5f} (se {se:.5f}), space {chi_s:.5f}, agree {100 * agree:.2f}%, "
            f"window [0.1, {LOG_LAMBDA - 0.01:.5f}]",
            t0,
            180,
        )

    def test_09_katok_pressure_endpoints(self):
        t0 = time.time()
        km = KatokMap()
        scheme = build_first_return_scheme(km, base=6, horizon=30, grid=(400, 400))
        rows = dict(pressure_curve(km, scheme, [0.0, 1.0]))
        e0 = abs(rows[0.0] - LOG_LAMBDA)
        e1 = abs(rows[1.0])
        report(
            9,
            e0 <= 5e-2 and e1 <= 5e-2,
            f"|P_L(0) - log lam| = {e0:.2e}, |P_L(1)| = {e1:.2e} "
            f"(residual mass {scheme.meta['residual_mass']:.3f})",
            t0,
            600,
        )

    def test_10_decay_clt_suite(self):
        t0 = time.time()
        # exact Markov-chain correlation rate
        P = np.array([[0.9, 0.1], [0.2, 0.8]])
        pi = np.array([2 / 3, 1 / 3])
        h = np.array([1.0, 0.0])
        fit = fit_decay(correlations_markov(P, pi, h, h, 25))
        ok = abs(fit["theta"] - 0.7) <= 0.02 * 0.7

        # CLT control: iid signs pass rate over fixed seeds
        n = 1000

        def make(rng):
            s = rng.integers(0, 2, size=n) * 2 - 1
            return float(s.sum() / math.sqrt(n))

        passes = sum(
            clt_check(make, n=n, replicas=600, seed=s)["pass"] for s in range(40)
        )
        ok &= passes >= 38  # >= 95 percent

        # Katok t = 1/2 pipeline: correlation decay of a disk observable
        km = KatokMap()
        sch = build_first_return_scheme(km, base=6, horizon=30, grid=(300, 300))
        t = 0.5
        PL = pressure_curve(km, sch, [t])[0][1]
        logJ = np.asarray(sch.meta["log_Ju_F"])
        cells = np.array(
            [e.geometry.get("cells", 1) for e in sch.elements], float
        )
        wJ = cells / sch.meta["cells_total"] * np.exp(
            (1 - t) * logJ - PL * sch.taus()
        )
        pts, wts = [], []
        reps = np.array([e.rep_point for e in sch.elements])
        cur = reps.copy()
        taus = sch.taus()
        for lvl in range(int(taus.max())):
            alive = taus > lvl
            pts.append(cur[alive].copy())
            wts.append(wJ[alive])
            cur[alive] = km.step_batch(cur[alive])
        pts = np.concatenate(pts)
        wts = np.concatenate(wts)

        u0 = km.params.u0

        def h_disk(z):
            zz = KatokMap.to_eigen(z)
            u = zz[:, 0] ** 2 + zz[:, 1] ** 2
            return np.exp(-16.0 * u / u0)

        series = correlations_orbit(km.step_batch, pts, wts, h_disk, h_disk, 20, seed=0)
        win = initial_decay_window(series)
        kfit = fit_decay(series, lag_window=win)
        ok &= kfit["usable_lags"] >= 8
        ok &= kfit["theta"] < 1.0
        ok &= kfit["r2"] >= 0.9
        report(
            10,
            ok,
            f"markov theta {fit['theta']:.4f}, clt passes {passes}/40, "
            f"katok theta {kfit['theta']:.3f} r2 {kfit['r2']:.3f} "
            f"({kfit['usable_lags']} lags)",
            t0,
            300,
        )

    def test_11_stirling_utility(self):
        t0 = time.time()
        min_slack = math.inf
        for n in range(0, 61):
            for m in range(0, n + 1):
                b = binomial_bound_check(n, m)
                min_slack = min(min_slack, b.slack)
                if not b.ok:
                    report(11, False, f"violated at (n, m) = ({n}, {m})", t0, 1)
        report(11, min_slack >= -1e-12, f"minimal slack {min_slack:.3e}", t0, 1)
