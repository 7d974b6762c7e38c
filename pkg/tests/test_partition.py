import math
from fractions import Fraction

import numpy as np
import pytest

from tower_thermo.partition import LAMBDA, NU0, PHI, Golden, MarkovPartition, default_partition


class TestGolden:
    def test_phi_identity(self):
        assert PHI * PHI == PHI + 1

    def test_inverse(self):
        lam_inv = LAMBDA.inverse()
        assert lam_inv == Golden(2, -1)
        assert LAMBDA * lam_inv == Golden(1, 0)

    def test_float(self):
        assert float(PHI) == pytest.approx((1 + math.sqrt(5)) / 2, abs=1e-15)

    def test_fractions(self):
        half = Golden(Fraction(1, 2), Fraction(1, 3))
        assert (half + half).p == 1


class TestPartition:
    def setup_method(self):
        self.part = default_partition()

    def test_strip_count(self):
        assert 3 <= self.part.n_strips <= 7
        assert self.part.n_strips == 7

    def test_spectral_radius(self):
        rho = np.max(np.abs(np.linalg.eigvals(self.part.adjacency.astype(float))))
        assert rho == pytest.approx(float(LAMBDA), abs=1e-10)

    def test_self_test(self):
        rep = self.part.self_test()
        assert rep["ok"], rep["failures"]

    def test_areas_tile(self):
        total = 0.0
        for s in self.part.strips:
            x0, x1, y0, y1 = s["box"].floats()
            total += (x1 - x0) * (y1 - y0)
        assert total * NU0 * NU0 == pytest.approx(1.0, abs=1e-12)

    def test_locate_samples(self):
        for k in range(self.part.n_strips):
            pts = self.part.sample_strip(k, 6, 6, margin=1e-3)
            loc = self.part.locate(pts)
            assert (loc == k).all()

    def test_locate_random_coverage(self):
        rng = np.random.default_rng(1)
        pts = rng.random((2000, 2))
        loc = self.part.locate(pts, tol=1e-12)
        assert (loc >= 0).mean() > 0.999

    def test_round_trip_coordinates(self):
        rng = np.random.default_rng(2)
        pts = rng.random((256, 2))
        z = self.part.to_golden(pts)
        back = self.part.from_golden(z)
        err = np.abs(back - pts)
        err = np.minimum(err, 1 - err)
        assert err.max() < 1e-12

    def test_first_return_renewal_identity(self):
        # sum_n S_n lam^{-n} -> 1 for every base strip
        lam = float(LAMBDA)
        for base in range(self.part.n_strips):
            counts = self.part.first_return_counts(base, 80)
            total = sum(c * lam ** -(n + 1) for n, c in enumerate(counts))
            assert total == pytest.approx(1.0, abs=2e-4), base

    def test_first_return_small_square(self):
        counts = self.part.first_return_counts(6, 10)
        # S_n = (n-2) 2^{n-3} for the small-square base
        assert counts == [0, 0, 1, 4, 12, 32, 80, 192, 448, 1024]

    def test_subshift_growth_below_entropy(self):
        for base in range(self.part.n_strips):
            assert self.part.subshift_growth(base) < float(LAMBDA)

    def test_descriptor(self):
        d = self.part.descriptor()
        assert len(d["strips"]) == 7
        assert d["kind"] == "golden_cat_partition"
