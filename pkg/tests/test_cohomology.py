import math

import numpy as np
import pytest

from tower_thermo.cohomology import (
    CoboundaryData,
    NonSummableError,
    ReferenceFill,
    compute_u,
    default_truncation,
    periodic_cohomology_check,
    reduce_to_one_sided,
)
from tower_thermo.shift import (
    Alphabet,
    CallablePotential,
    HolderBound,
    OneBlockPotential,
    PeriodicSequence,
    TabulatedPotential,
    WordSequence,
)

A3 = Alphabet(3)
A2 = Alphabet(2)
G_TABLE = np.array([0.3, -0.7, 1.1])


def g_past():
    """phi(a) = g(a_{-1})"""
    return TabulatedPotential(A3, G_TABLE, lo=-1)


def holder_potential(alphabet=A2, r=0.5, span=40, seed=0):
    w = np.random.default_rng(seed).normal(size=alphabet.size)

    def fn(seq):
        return math.fsum(r ** abs(k) * w[seq.symbol(k)] for k in range(-span, span + 1))

    C = 2.0 * float(np.abs(w).max()) / (1.0 - r)
    return CallablePotential(alphabet, fn, HolderBound(C, r))


class TestComputeU:
    def test_one_sided_gives_zero(self):
        phi = OneBlockPotential(A3, G_TABLE)
        val, err = compute_u(phi, ReferenceFill(), PeriodicSequence((1, 2)), J=6)
        assert val == 0.0
        assert err == 0.0

    def test_past_symbol(self):
        # only the j = 0 term survives: u(a) = g(a_{-1}) - g(r_{-1})
        phi = g_past()
        a = PeriodicSequence((2, 0, 1))  # a_{-1} = word[-1 mod 3] = 1
        val, err = compute_u(phi, ReferenceFill(), a, J=6)
        assert val == pytest.approx(G_TABLE[1] - G_TABLE[0], abs=1e-14)
        assert err == 0.0

    def test_holder_tail(self):
        phi = CallablePotential(A2, lambda s: 0.0, HolderBound(1.0, 0.5))
        _, err = compute_u(phi, ReferenceFill(), PeriodicSequence((0, 1)), J=30)
        assert err == pytest.approx(2.0**-31, rel=1e-12)

    def test_boundedness(self):
        # |u| <= sum_{j>=0} V_{j+1}(phi) on sampled sequences
        phi = holder_potential()
        bound = phi.var_bound.tail(0)
        rng = np.random.default_rng(1)
        for _ in range(10):
            word = tuple(rng.integers(0, 2, size=rng.integers(1, 7)))
            val, _ = compute_u(phi, ReferenceFill(), PeriodicSequence(word), J=40)
            assert abs(val) <= bound + 1e-9

    def test_default_truncation(self):
        phi = CallablePotential(A2, lambda s: 0.0, HolderBound(1.0, 0.5))
        data = default_truncation(phi, tol=1e-10)
        assert data.tail_bound < 1e-10
        assert default_truncation(phi, tol=1e-10).J <= 35


class TestReduce:
    def test_one_sided_fixed_point(self):
        phi = OneBlockPotential(A3, G_TABLE)
        psi = reduce_to_one_sided(phi, J=4)
        for w in [(0,), (1, 2), (2, 0, 1)]:
            a = PeriodicSequence(w)
            assert psi.value(a) == pytest.approx(phi.value(a), abs=1e-12)

    def test_past_symbol_telescopes(self):
        phi = g_past()
        psi = reduce_to_one_sided(phi)
        for w in [(0, 1, 2), (2, 2), (1,)]:
            assert psi.value(PeriodicSequence(w)) == pytest.approx(
                G_TABLE[w[0]], abs=1e-14
            )

    def test_one_sidedness(self):
        # psi(a) = psi(a') whenever the futures agree
        phi = holder_potential()
        psi = reduce_to_one_sided(phi, J=25)
        rng = np.random.default_rng(2)
        for _ in range(8):
            future = rng.integers(0, 2, size=30)
            past1 = rng.integers(0, 2, size=20)
            past2 = rng.integers(0, 2, size=20)
            s1 = WordSequence(np.concatenate([past1, future]), anchor=-20)
            s2 = WordSequence(np.concatenate([past2, future]), anchor=-20)
            assert psi.value(s1) == pytest.approx(psi.value(s2), abs=1e-12)

    def test_derived_variation_bound(self):
        # V_n(psi) <= 2^-n + 8 * sum_{j >= floor((n-2)/2)} 2^-j stays geometric
        phi = CallablePotential(A2, lambda s: 0.0, HolderBound(1.0, 0.5))
        psi = reduce_to_one_sided(phi, J=30)
        for n in (2, 4, 8, 16):
            m = (n - 2) // 2
            explicit = 2.0**-n + 8.0 * sum(2.0**-j for j in range(max(m, 1), 200))
            assert psi.var_bound.V(n) <= explicit + 1e-12
        assert psi.var_bound.V(20) < psi.var_bound.V(8)

    def test_truncation_error_recorded(self):
        phi = CallablePotential(A2, lambda s: 0.0, HolderBound(1.0, 0.5))
        psi = reduce_to_one_sided(phi, J=20)
        assert psi.truncation_error == pytest.approx(2.0 * 2.0**-21, rel=1e-12)


class TestPeriodicAgreement:
    def test_exact_for_past_symbol(self):
        phi = g_past()
        psi = reduce_to_one_sided(phi)
        assert periodic_cohomology_check(phi, psi, PeriodicSequence((0, 1))) == 0.0

    def test_one_sided_identity(self):
        phi = OneBlockPotential(A3, G_TABLE)
        psi = reduce_to_one_sided(phi, J=3)
        assert periodic_cohomology_check(phi, psi, PeriodicSequence((0, 2, 1))) == 0.0

    def test_holder_within_tail(self):
        phi = holder_potential()
        psi = reduce_to_one_sided(phi, J=40)
        rng = np.random.default_rng(3)
        for period in range(1, 13):
            word = tuple(rng.integers(0, 2, size=period))
            gap = periodic_cohomology_check(phi, psi, PeriodicSequence(word))
            assert gap <= psi.truncation_error + 1e-12


class TestErrors:
    def test_non_summable(self):
        class BadBound:
            heuristic_tail = False

            def V(self, n):
                return 1.0 / n

            def tail(self, m):
                return math.inf

            def summable(self):
                return False

        phi = CallablePotential(A2, lambda s: 0.0, BadBound())
        with pytest.raises(NonSummableError):
            compute_u(phi, ReferenceFill(), PeriodicSequence((0,)), J=5)

    def test_coboundary_data_validation(self):
        with pytest.raises(Exception):
            CoboundaryData(0, 1.0)
