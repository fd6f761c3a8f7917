import math

import numpy as np
import pytest

from lgcn.hyperboloid import (
    HyperPoint,
    TangentVector,
    distance,
    exp_origin,
    log_origin,
    lorentz_inner,
    lorentz_norm,
    origin,
    project_to_manifold,
    sq_lorentz_distance,
)

from conftest import random_point, random_tangent

COSH1 = 1.5430806348152437
SINH1 = 1.1752011936438014


class TestLorentzInner:
    def test_origin_self_product(self):
        assert lorentz_inner([1.0, 0.0], [1.0, 0.0]) == -1.0

    def test_direct_expansion(self):
        # -1*0 + 0*1 + 0*2: the time component of y is zero.
        assert lorentz_inner([1.0, 0.0, 0.0], [0.0, 1.0, 2.0]) == 0.0
        assert lorentz_inner([1.0, 2.0, 0.0], [0.0, 1.0, 2.0]) == 2.0

    def test_boost_pair(self):
        # -cosh(1)cosh(2) + sinh(1)sinh(2) = -cosh(2-1)
        x = [math.cosh(1), math.sinh(1)]
        y = [math.cosh(2), math.sinh(2)]
        assert lorentz_inner(x, y) == pytest.approx(-COSH1, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            lorentz_inner([1.0, 0.0], [1.0, 0.0, 0.0])

    def test_symmetry(self, rng):
        for _ in range(50):
            x = rng.standard_normal(5)
            y = rng.standard_normal(5)
            assert lorentz_inner(x, y) == pytest.approx(lorentz_inner(y, x), abs=1e-12)


class TestLorentzNorm:
    def test_tangent_is_euclidean(self):
        assert lorentz_norm([0.0, 3.0, 4.0]) == pytest.approx(5.0, abs=1e-12)

    def test_zero(self):
        assert lorentz_norm([0.0, 0.0, 0.0]) == 0.0

    def test_modulus_variant(self):
        # <v,v> = -4 + 2 = -2
        assert lorentz_norm([2.0, 1.0, 1.0], modulus=True) == pytest.approx(math.sqrt(2), abs=1e-12)

    def test_strict_rejects_negative_inner(self):
        with pytest.raises(ValueError):
            lorentz_norm([2.0, 1.0, 1.0])


class TestExpOrigin:
    def test_zero_maps_to_origin(self):
        p = exp_origin(TangentVector.from_spatial(np.zeros(3), 1.0))
        np.testing.assert_array_equal(p.coords, [1.0, 0.0, 0.0, 0.0])

    def test_unit_vector(self):
        p = exp_origin(TangentVector.from_spatial([1.0], 1.0))
        np.testing.assert_allclose(p.coords, [COSH1, SINH1], atol=1e-12)

    def test_beta_four(self):
        p = exp_origin(TangentVector.from_spatial([2.0, 0.0], 4.0))
        np.testing.assert_allclose(p.coords, [2 * COSH1, 2 * SINH1, 0.0], atol=1e-12)

    def test_nonzero_first_coordinate_rejected(self):
        with pytest.raises(ValueError):
            TangentVector([0.1, 1.0], 1.0)

    def test_manifold_closure(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 16))
            beta = float(rng.uniform(0.5, 2.0))
            p = random_point(rng, n, beta, radius=4.0)
            assert abs(lorentz_inner(p.coords, p.coords) + beta) <= 1e-9


class TestLogOrigin:
    def test_origin_maps_to_zero(self):
        v = log_origin(origin(3, 2.0))
        np.testing.assert_array_equal(v.coords, np.zeros(4))

    def test_inverse_of_exp(self):
        p = HyperPoint([COSH1, SINH1], 1.0)
        np.testing.assert_allclose(log_origin(p).coords, [0.0, 1.0], atol=1e-12)

    def test_first_coordinate_exactly_zero(self, rng):
        for _ in range(50):
            p = random_point(rng, 4, 1.3, radius=3.0)
            assert log_origin(p).coords[0] == 0.0

    def test_round_trip(self, rng):
        # ||log(exp(v)) - v||_inf <= 1e-8 for ||v|| <= 5
        for _ in range(300):
            n = int(rng.integers(1, 16))
            beta = float(rng.uniform(0.5, 2.0))
            v = random_tangent(rng, n, beta, radius=5.0)
            back = log_origin(exp_origin(v))
            assert np.max(np.abs(back.coords - v.coords)) <= 1e-8


class TestDistance:
    def test_self_distance_zero(self, rng):
        # arcosh near 1 turns rounding eps into sqrt(eps); exact zero is only
        # guaranteed when the clamp engages.
        p = random_point(rng, 3, 1.0)
        assert distance(p, p) == pytest.approx(0.0, abs=1e-6)
        assert distance(origin(3, 1.0), origin(3, 1.0)) == 0.0

    def test_boost_pair(self):
        x = HyperPoint([math.cosh(1), math.sinh(1)], 1.0)
        y = HyperPoint([math.cosh(2), math.sinh(2)], 1.0)
        assert distance(x, y) == pytest.approx(1.0, abs=1e-12)

    def test_symmetry_and_positivity(self, rng):
        for _ in range(100):
            beta = float(rng.uniform(0.5, 2.0))
            x = random_point(rng, 5, beta)
            y = random_point(rng, 5, beta)
            d_xy = distance(x, y)
            assert d_xy == pytest.approx(distance(y, x), abs=1e-12)
            assert d_xy >= 0.0

    def test_zero_iff_equal(self, rng):
        x = random_point(rng, 4, 1.0)
        y = random_point(rng, 4, 1.0)
        assert distance(x, y) > 1e-6

    def test_beta_mismatch_rejected(self):
        with pytest.raises(ValueError):
            distance(origin(2, 1.0), origin(2, 2.0))


class TestSqLorentzDistance:
    def test_zero_at_equal_points(self, rng):
        p = random_point(rng, 3, 1.7)
        assert sq_lorentz_distance(p, p) == pytest.approx(0.0, abs=1e-12)

    def test_boost_pair(self):
        x = HyperPoint([math.cosh(1), math.sinh(1)], 1.0)
        y = HyperPoint([math.cosh(2), math.sinh(2)], 1.0)
        assert sq_lorentz_distance(x, y) == pytest.approx(1.0861612696304874, abs=1e-12)

    def test_nonnegative_on_random_pairs(self, rng):
        for _ in range(1000):
            beta = float(rng.uniform(0.5, 2.0))
            n = int(rng.integers(1, 8))
            x = random_point(rng, n, beta, radius=4.0)
            y = random_point(rng, n, beta, radius=4.0)
            assert sq_lorentz_distance(x, y) >= 0.0

    def test_distance_identity(self, rng):
        # d_L^2 = -2*beta + 2*beta*cosh(d_H/sqrt(beta))
        for _ in range(200):
            beta = float(rng.uniform(0.5, 2.0))
            x = random_point(rng, 6, beta)
            y = random_point(rng, 6, beta)
            lhs = sq_lorentz_distance(x, y)
            rhs = -2 * beta + 2 * beta * math.cosh(distance(x, y) / math.sqrt(beta))
            assert abs(lhs - rhs) <= 1e-9


class TestProjectToManifold:
    def test_zero_spatial_forces_origin(self):
        p = project_to_manifold([999.0, 0.0, 0.0], 1.0)
        np.testing.assert_array_equal(p.coords, [1.0, 0.0, 0.0])

    def test_recomputes_first_coordinate(self):
        p = project_to_manifold([0.1, 3.0, 4.0], 1.0)
        np.testing.assert_allclose(p.coords, [math.sqrt(26), 3.0, 4.0], atol=1e-12)

    def test_idempotent(self, rng):
        raw = rng.standard_normal(5)
        once = project_to_manifold(raw, 1.2)
        twice = project_to_manifold(once.coords, 1.2)
        np.testing.assert_array_equal(once.coords, twice.coords)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            project_to_manifold([1.0, np.nan], 1.0)


class TestHyperPointInvariants:
    def test_off_manifold_rejected(self):
        with pytest.raises(ValueError):
            HyperPoint([1.0, 1.0], 1.0)

    def test_negative_x0_rejected(self):
        with pytest.raises(ValueError):
            HyperPoint([-1.0, 0.0], 1.0)

    def test_nonpositive_beta_rejected(self):
        with pytest.raises(ValueError):
            HyperPoint([1.0, 0.0], 0.0)

    def test_coords_immutable(self):
        p = origin(2, 1.0)
        with pytest.raises(ValueError):
            p.coords[0] = 5.0
