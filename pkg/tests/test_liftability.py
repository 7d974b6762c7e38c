import math

import numpy as np
import pytest

from tower_thermo.katok import LOG_LAMBDA, cat_first_return_scheme
from tower_thermo.liftability import (
    binomial_bound_check,
    check_L2,
    count_profile,
    sigma_entropy,
)
from tower_thermo.partition import default_partition
from tower_thermo.shift import InvalidInputError
from tower_thermo.tower import InducingScheme, SchemeElement


def full_shift_first_return_scheme(N, horizon):
    """First-return scheme of the full N-shift to the cylinder [0]:
    S_n = (N-1)^(n-1) exactly (words 0 w with w avoiding 0)."""
    els = []
    for n in range(1, horizon + 1):
        els.append(SchemeElement(id=f"tau{n}", tau=n, count=(N - 1) ** (n - 1)))
    return InducingScheme(els)


class TestCountProfile:
    def test_full_two_shift(self):
        # unique word 0 1^{n-1}: S_n = 1 for all n, S* = 0
        prof = count_profile(full_shift_first_return_scheme(2, 12))
        assert prof.S == [1] * 12
        assert prof.S_star == [0] * 12

    def test_full_three_shift(self):
        prof = count_profile(full_shift_first_return_scheme(3, 14))
        assert prof.S == [2 ** (n - 1) for n in range(1, 15)]
        assert abs(prof.h_fit - math.log(2)) < 0.02

    def test_cat_scheme_gap(self):
        prof = count_profile(cat_first_return_scheme(base=6, horizon=40))
        assert prof.h_fit < LOG_LAMBDA - 0.05
        # exact transfer-matrix counts: renewal sum below 1 at the eigenvalue
        part = default_partition()
        counts = part.first_return_counts(6, 40)
        assert prof.S[2] == counts[2] == 1

    def test_consistency_enforced(self):
        prof = count_profile(full_shift_first_return_scheme(3, 6))
        assert all(s == a + b for s, a, b in zip(prof.S, prof.S_first, prof.S_star))

    def test_star_fit_used_when_present(self):
        els = [
            SchemeElement(id=f"f{n}", tau=n, count=1, first_return=True)
            for n in range(1, 11)
        ] + [
            SchemeElement(id=f"s{n}", tau=n, count=2 ** (n - 1), first_return=False)
            for n in range(1, 11)
        ]
        prof = count_profile(InducingScheme(els))
        assert abs(prof.h_fit - math.log(2)) < 0.05


class TestL2:
    def test_pure_first_return_passes(self):
        prof = count_profile(full_shift_first_return_scheme(3, 10))
        out = check_L2(prof, h=0.01)
        assert out["pass"]
        assert out["minimal_h"] == 0.0

    def test_exponential_star(self):
        els = [
            SchemeElement(id=f"s{n}", tau=n, count=2 ** (n - 1), first_return=False)
            for n in range(1, 15)
        ]
        prof = count_profile(InducingScheme(els))
        out = check_L2(prof, h=math.log(2) + 0.01)
        assert out["pass"]
        # minimal h approaches log 2 from below as the horizon grows
        assert out["minimal_h"] == pytest.approx(13 * math.log(2) / 14, abs=1e-12)
        assert not check_L2(prof, h=0.55)["pass"]

    def test_factorial_fails(self):
        # super-exponential counts: the minimal passing h keeps growing with
        # the horizon, and moderate cutoffs fail outright
        els = [
            SchemeElement(id=f"s{n}", tau=n, count=math.factorial(n),
                          first_return=False)
            for n in range(1, 15)
        ]
        prof = count_profile(InducingScheme(els))
        assert not check_L2(prof, h=1.5)["pass"]
        short = count_profile(InducingScheme(els[:8]))
        assert check_L2(prof, h=1.5)["minimal_h"] > check_L2(short, h=1.5)["minimal_h"]


class TestSigma:
    def test_symmetric_maximum(self):
        assert sigma_entropy(0.5) == pytest.approx(math.log(2), abs=1e-15)

    def test_endpoints(self):
        assert sigma_entropy(0.0) == 0.0
        assert sigma_entropy(1.0) == 0.0

    def test_quarter(self):
        assert sigma_entropy(0.25) == pytest.approx(0.5623351446188083, abs=1e-12)

    def test_domain_error(self):
        with pytest.raises(InvalidInputError):
            sigma_entropy(1.2)

    def test_concavity_grid(self):
        xs = np.arange(0.0, 1.0 + 1e-12, 1e-3)
        vals = np.array([sigma_entropy(x) for x in xs])
        assert vals.max() == pytest.approx(math.log(2), abs=1e-6)
        assert abs(xs[vals.argmax()] - 0.5) < 2e-3
        second = vals[2:] - 2 * vals[1:-1] + vals[:-2]
        assert (second <= 1e-12).all()


class TestBinomialBound:
    def test_examples(self):
        b = binomial_bound_check(10, 5)
        assert b.ok
        assert math.log(252) <= 10 * math.log(2)
        assert binomial_bound_check(7, 0).slack == 0.0
        assert binomial_bound_check(40, 10).slack > 0.0

    def test_all_small(self):
        for n in range(0, 61):
            for m in range(0, n + 1):
                assert binomial_bound_check(n, m).ok

    def test_domain(self):
        with pytest.raises(InvalidInputError):
            binomial_bound_check(61, 10)
