"""Backend equivalence: the compiled core and the numpy fallback must agree."""

import math

import numpy as np
import pytest

from tower_thermo import _purekernels as pure
from tower_thermo import kernels

try:
    from tower_thermo import _core as compiled
except ImportError:  # pragma: no cover
    compiled = None

LOGLAM = math.log((3 + math.sqrt(5)) / 2)
ARGS = (0.01, 0.1, 0.25, 1, LOGLAM)  # u0, r0, alpha, variant(as_printed)

needs_compiled = pytest.mark.skipif(compiled is None, reason="no compiled core")


class TestPsi:
    def test_boundary_values(self):
        for variant in (0, 1):
            u0 = 0.01
            psi = pure.psi_eval(np.array([0.0, 0.02, 1.0]), u0, 0.1, 0.25, variant)
            assert psi[0] == 0.0
            assert psi[1] == 1.0
            assert psi[2] == 1.0

    def test_monotone_and_continuous(self):
        # the core has unbounded slope at 0 (u^alpha), so continuity is only
        # checked away from the origin
        us = np.linspace(1e-4, 0.012, 4000)
        for variant in (0, 1):
            ps = pure.psi_eval(us, 0.01, 0.1, 0.25, variant)
            assert (np.diff(ps) > -1e-12).all()
            assert np.abs(np.diff(ps)).max() < 0.02  # no jumps
            assert pure.psi_eval(np.array([1e-12]), 0.01, 0.1, 0.25, variant)[0] < 0.02

    def test_derivative_consistency(self):
        us = np.linspace(2e-4, 0.0099, 500)
        for variant in (0, 1):
            dp = pure.dpsi_eval(us, 0.01, 0.1, 0.25, variant)
            h = 1e-9
            fd = (
                pure.psi_eval(us + h, 0.01, 0.1, 0.25, variant)
                - pure.psi_eval(us - h, 0.01, 0.1, 0.25, variant)
            ) / (2 * h)
            assert np.abs(dp - fd).max() < 1e-3 * max(1.0, np.abs(dp).max())

    @needs_compiled
    def test_backends_match_psi(self):
        us = np.linspace(0.0, 0.012, 300)
        for variant in (0, 1, 2):
            a = pure.psi_eval(us, 0.01, 0.1, 0.25, variant)
            b = np.array(
                [compiled.psi_eval_scalar(u, 0.01, 0.1, 0.25, variant) for u in us]
            )
            assert np.abs(a - b).max() < 1e-14


class TestFlow:
    @needs_compiled
    def test_flow_match(self):
        rng = np.random.default_rng(0)
        z = rng.uniform(-0.25, 0.25, size=(64, 2))
        a = compiled.flow_map(z, *ARGS, 1e-10)
        b = pure.flow_map(z, *ARGS, 1e-10)
        assert np.abs(a - b).max() < 1e-9

    @needs_compiled
    def test_tangent_match(self):
        rng = np.random.default_rng(1)
        z = rng.uniform(-0.2, 0.2, size=(32, 2))
        V = np.tile(np.eye(2), (32, 1, 1))
        za, Va, da = compiled.flow_map_tangent(z, V, *ARGS, 1e-10)
        zb, Vb, db = pure.flow_map_tangent(z, V, *ARGS, 1e-10)
        assert np.abs(za - zb).max() < 1e-9
        assert np.abs(Va - Vb).max() < 1e-8
        assert np.abs(da - db).max() < 1e-9

    def test_degenerate_exponential(self):
        z = np.array([[0.1, -0.05]])
        out = kernels.flow_map(z, 0.0, 0.1, 0.25, 2, LOGLAM, 1e-12)
        lam = math.exp(LOGLAM)
        assert out[0, 0] == pytest.approx(0.1 * lam, rel=1e-9)
        assert out[0, 1] == pytest.approx(-0.05 / lam, rel=1e-9)

    def test_origin_fixed(self):
        out = kernels.flow_map(np.zeros((1, 2)), *ARGS, 1e-10)
        assert np.all(out == 0.0)

    def test_tangent_volume(self):
        # det V stays exp(int div) along the flow
        rng = np.random.default_rng(2)
        z = rng.uniform(-0.15, 0.15, size=(16, 2))
        V = np.tile(np.eye(2), (16, 1, 1))
        z1, V1, dv = kernels.flow_map_tangent(z, V, *ARGS, 1e-11)
        dets = V1[:, 0, 0] * V1[:, 1, 1] - V1[:, 0, 1] * V1[:, 1, 0]
        assert np.abs(dets - np.exp(dv)).max() < 1e-7


class TestEnumeration:
    @needs_compiled
    @pytest.mark.parametrize("L,lo", [(1, 0), (2, 0), (2, -1), (3, -1)])
    def test_match(self, L, lo):
        rng = np.random.default_rng(L * 7 + lo)
        N = 3
        table = rng.normal(size=(N,) * L)
        a = compiled.periodic_logsums(table, N, lo, 1, [1, 2, 5, 8])
        b = pure.periodic_logsums(table, N, lo, 1, [1, 2, 5, 8])
        assert np.abs(a - b).max() < 1e-10

    def test_counting(self):
        out = pure.periodic_logsums(np.zeros((4,)), 4, 0, 0, [2, 5])
        assert out[0] == pytest.approx(math.log(4))
        assert out[1] == pytest.approx(4 * math.log(4))

    def test_anchor_invariance(self):
        # cyclic sums do not depend on the window anchor
        rng = np.random.default_rng(9)
        t = rng.normal(size=(2, 2))
        a = pure.periodic_logsums(t, 2, 0, 0, [6])
        b = pure.periodic_logsums(t, 2, -1, 0, [6])
        assert a[0] == pytest.approx(b[0], abs=1e-12)


class TestBackendSelection:
    def test_backend_reported(self):
        assert kernels.BACKEND in ("compiled", "python")

    @needs_compiled
    def test_compiled_preferred(self):
        import os

        if os.environ.get("TOWER_THERMO_BACKEND", "").lower() == "python":
            pytest.skip("fallback forced via TOWER_THERMO_BACKEND")
        assert kernels.BACKEND == "compiled"
