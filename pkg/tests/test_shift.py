import math

import numpy as np
import pytest

from tower_thermo.shift import (
    Alphabet,
    CallablePotential,
    ConstantPotential,
    Cylinder,
    HolderBound,
    InvalidInputError,
    OneBlockPotential,
    PeriodicSequence,
    TabulatedPotential,
    TwoBlockPotential,
    Word,
    WordSequence,
    birkhoff_sum,
    block_table,
    cocycle_check,
    estimate_variation,
    potential_from_descriptor,
    potential_to_descriptor,
)

A2 = Alphabet(2)
A3 = Alphabet(3)


class TestBirkhoff:
    def test_zero_potential(self):
        phi = ConstantPotential(A3, 0.0)
        assert birkhoff_sum(phi, PeriodicSequence((0, 1, 2)), 7) == 0.0

    def test_indicator_alternating(self):
        # phi = 1[a_0 = 0] on periodic 01, n = 4 -> 2
        phi = OneBlockPotential(A2, [1.0, 0.0])
        assert birkhoff_sum(phi, PeriodicSequence((0, 1)), 4) == 2.0

    def test_log_weights(self):
        # direct-summation oracle
        p = np.array([0.25, 0.75])
        phi = OneBlockPotential(A2, np.log(p))
        got = birkhoff_sum(phi, PeriodicSequence((0, 1, 1)), 3)
        want = math.fsum([math.log(0.25), math.log(0.75), math.log(0.75)])
        assert got == pytest.approx(want, abs=1e-12)
        assert got == pytest.approx(-1.9616585060234524, abs=1e-10)

    def test_invalid_symbol(self):
        phi = OneBlockPotential(A2, [0.0, 0.0])
        with pytest.raises(InvalidInputError):
            birkhoff_sum(phi, PeriodicSequence((0, 2)), 2)

    def test_bad_n(self):
        phi = ConstantPotential(A2)
        with pytest.raises(InvalidInputError):
            birkhoff_sum(phi, PeriodicSequence((0,)), 0)


class TestVariation:
    def test_window_only(self):
        phi = OneBlockPotential(A3, [0.0, 1.0, -1.0])
        assert estimate_variation(phi, 2, 32) == 0.0

    def test_geometric_tail(self):
        # phi(a) = sum_k 2^{-|k|} g(a_k), g in {0,1}: V_3 <= 2^{-1}
        def fn(seq):
            return math.fsum(
                2.0 ** -abs(k) * seq.symbol(k) for k in range(-20, 21)
            )

        phi = CallablePotential(A2, fn, HolderBound(4.0, 0.5))
        v = estimate_variation(phi, 3, 64, horizon=20)
        assert 0.0 < v <= 0.5 + 1e-12

    def test_constant(self):
        phi = ConstantPotential(A3, 2.5)
        assert estimate_variation(phi, 5, 16) == 0.0

    def test_never_exceeds_declared(self):
        phi = TwoBlockPotential(A2, [[0.0, 1.0], [0.5, -0.5]])
        for n in (1, 2, 3):
            assert estimate_variation(phi, n, 64) <= phi.var_bound.V(n) + 1e-12

    def test_nested_sampling_monotone(self):
        def fn(seq):
            return math.fsum(0.7 ** abs(k) * seq.symbol(k) for k in range(-12, 13))

        phi = CallablePotential(A2, fn, HolderBound(10.0, 0.7))
        vs = [estimate_variation(phi, n, 48, horizon=14, seed=3) for n in (1, 2, 3, 4)]
        declared = [phi.var_bound.V(n) for n in (1, 2, 3, 4)]
        assert all(v <= d + 1e-9 for v, d in zip(vs, declared))


class TestCocycle:
    def test_zero(self):
        assert cocycle_check(ConstantPotential(A2), PeriodicSequence((0, 1)), 3, 5)

    def test_one_block_additivity(self):
        phi = OneBlockPotential(A3, [0.0, 1.0, 2.0])
        assert cocycle_check(phi, PeriodicSequence((0, 1, 2)), 2, 4)

    def test_random_holder(self):
        rng = np.random.default_rng(7)

        def fn(seq):
            return math.fsum(0.5 ** abs(k) * w[seq.symbol(k)] for k in range(-15, 16))

        w = rng.normal(size=3)
        phi = CallablePotential(A3, fn, HolderBound(4.0, 0.5))
        for _ in range(5):
            word = tuple(rng.integers(0, 3, size=rng.integers(1, 6)))
            n, m = int(rng.integers(1, 5)), int(rng.integers(1, 5))
            assert cocycle_check(phi, PeriodicSequence(word), n, m)


class TestCylinders:
    def test_nesting(self):
        w = Word((0, 1), anchor=0)
        w_ext = Word((0, 1, 2), anchor=0)
        seqs = [PeriodicSequence((0, 1, 2)), WordSequence((0, 1, 2, 1), anchor=0)]
        for s in seqs:
            if Cylinder(w_ext).contains(s):
                assert Cylinder(w).contains(s)

    def test_word_validation(self):
        with pytest.raises(InvalidInputError):
            Word(())


class TestDescriptors:
    @pytest.mark.parametrize(
        "desc",
        [
            {"kind": "bernoulli", "alphabet": 2, "params": {"weights": [-0.6, -1.2]}},
            {"kind": "markov1", "alphabet": 2,
             "params": {"log_matrix": [[0.0, 0.1], [-0.2, 0.4]]}},
            {"kind": "tabulated", "alphabet": 2,
             "params": {"table": [0.3, -0.7], "lo": -1}},
            {"kind": "constant", "alphabet": 3, "params": {"c": 1.5}},
        ],
    )
    def test_round_trip(self, desc):
        phi = potential_from_descriptor(desc)
        d2 = potential_to_descriptor(phi)
        phi2 = potential_from_descriptor(d2)
        s = PeriodicSequence((0, 1))
        assert phi.value(s) == phi2.value(s)

    def test_holder_attached(self):
        desc = {"kind": "bernoulli", "alphabet": 2,
                "params": {"weights": [0.0, 0.0]}, "holder": {"C": 2.0, "r": 0.5}}
        phi = potential_from_descriptor(desc)
        assert phi.var_bound.V(3) == pytest.approx(0.25)

    def test_unknown_kind(self):
        with pytest.raises(InvalidInputError):
            potential_from_descriptor({"kind": "nope", "alphabet": 2})


class TestBlockTable:
    def test_exact_for_two_block(self):
        phi = TwoBlockPotential(A2, [[0.0, 1.0], [2.0, 3.0]])
        table, err = block_table(phi, 0, 1)
        assert err == 0.0
        assert table[1, 0] == 2.0

    def test_anchor_window(self):
        phi = TabulatedPotential(A2, [[0.0, 1.0], [2.0, 3.0]], lo=-1)
        table, err = block_table(phi, -1, 0)
        assert err == 0.0
        assert table[1, 0] == 2.0
