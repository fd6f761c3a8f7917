import math

import numpy as np
import pytest

from lgcn.activations import RELU, Nonlinearity, leaky_relu
from lgcn.hyperboloid import HyperPoint, distance, lorentz_inner, origin
from lgcn.ops import lorentz_matvec, lorentz_pointwise
from lgcn.poincare import (
    BallPoint,
    ball_exp_origin,
    ball_log_origin,
    ball_to_hyperboloid,
    hyperboloid_to_ball,
    mobius_matvec,
    mobius_pointwise,
)

from conftest import random_point

TANH1 = 0.7615941559557649
TANH_HALF = 0.46211715726000974


def rel_err(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-12))


class TestBallMaps:
    def test_exp_zero(self):
        p = ball_exp_origin(np.zeros(3), 1.0)
        np.testing.assert_array_equal(p.coords, np.zeros(3))

    def test_exp_unit(self):
        p = ball_exp_origin([1.0, 0.0], 1.0)
        np.testing.assert_allclose(p.coords, [TANH1, 0.0], atol=1e-12)

    def test_log_zero(self):
        assert np.all(ball_log_origin(BallPoint(np.zeros(2), 1.0)) == 0.0)

    def test_log_inverse(self):
        v = ball_log_origin(BallPoint([TANH1, 0.0], 1.0))
        np.testing.assert_allclose(v, [1.0, 0.0], atol=1e-12)

    def test_round_trip(self, rng):
        for _ in range(100):
            alpha = float(rng.uniform(0.5, 2.0))
            v = rng.standard_normal(4)
            back = ball_log_origin(ball_exp_origin(v, alpha))
            assert np.max(np.abs(back - v)) <= 1e-10

    def test_log_norm_monotone(self, rng):
        alpha = 1.0
        direction = np.array([1.0, 0.0])
        norms = [np.linalg.norm(ball_log_origin(BallPoint(r * direction, alpha)))
                 for r in (0.1, 0.3, 0.5, 0.7, 0.9)]
        assert all(a < b for a, b in zip(norms, norms[1:]))

    def test_ball_closure(self, rng):
        for _ in range(100):
            alpha = float(rng.uniform(0.5, 2.0))
            p = ball_exp_origin(3.0 * rng.standard_normal(3), alpha)
            assert alpha * float(p.coords @ p.coords) < 1.0

    def test_boundary_rejected(self):
        with pytest.raises(ValueError):
            BallPoint([1.0, 0.0], 1.0)


class TestIsomorphisms:
    def test_origin_maps_to_ball_center(self):
        b = hyperboloid_to_ball(origin(3, 2.0))
        assert b.alpha == 0.5
        np.testing.assert_array_equal(b.coords, np.zeros(3))

    def test_known_point(self):
        b = hyperboloid_to_ball(HyperPoint([math.cosh(1), math.sinh(1)], 1.0))
        np.testing.assert_allclose(b.coords, [TANH_HALF], atol=1e-12)

    def test_ball_center_to_origin(self):
        h = ball_to_hyperboloid(BallPoint(np.zeros(2), 0.25))
        np.testing.assert_allclose(h.coords, [2.0, 0.0, 0.0], atol=1e-12)

    def test_known_inverse(self):
        h = ball_to_hyperboloid(BallPoint([TANH_HALF], 1.0))
        np.testing.assert_allclose(h.coords, [math.cosh(1), math.sinh(1)], atol=1e-12)

    def test_round_trip_both_ways(self, rng):
        for _ in range(200):
            beta = float(rng.uniform(0.5, 2.0))
            n = int(rng.integers(1, 16))
            x = random_point(rng, n, beta, radius=4.0)
            back = ball_to_hyperboloid(hyperboloid_to_ball(x))
            assert np.max(np.abs(back.coords - x.coords)) <= 1e-10 * max(1.0, np.max(np.abs(x.coords)))

    def test_ball_round_trip(self, rng):
        for _ in range(100):
            alpha = float(rng.uniform(0.5, 2.0))
            y = ball_exp_origin(rng.standard_normal(3), alpha)
            back = hyperboloid_to_ball(ball_to_hyperboloid(y))
            assert np.max(np.abs(back.coords - y.coords)) <= 1e-10

    def test_mapped_points_on_manifold(self, rng):
        for _ in range(100):
            alpha = float(rng.uniform(0.5, 2.0))
            y = ball_exp_origin(0.8 * rng.standard_normal(4), alpha)
            h = ball_to_hyperboloid(y)
            assert abs(lorentz_inner(h.coords, h.coords) + 1.0 / alpha) <= 1e-9


class TestMobiusMatvec:
    def test_identity_matrix(self, rng):
        y = ball_exp_origin(rng.standard_normal(3), 1.0)
        out = mobius_matvec(np.eye(3), y)
        np.testing.assert_allclose(out.coords, y.coords, atol=1e-12)

    def test_zero_point(self):
        out = mobius_matvec(np.ones((4, 2)), BallPoint(np.zeros(2), 1.0))
        np.testing.assert_array_equal(out.coords, np.zeros(4))

    def test_zero_image(self):
        y = ball_exp_origin([0.5, 0.0], 1.0)
        out = mobius_matvec(np.array([[0.0, 1.0]]), y)
        np.testing.assert_array_equal(out.coords, np.zeros(1))

    def test_commutes_with_isomorphism(self, rng):
        # hyperboloid route: ball -> hyperboloid -> matvec -> ball
        for _ in range(200):
            beta = float(rng.uniform(0.5, 2.0))
            n = int(rng.integers(2, 16))
            m = int(rng.integers(2, 16))
            mat = rng.standard_normal((m, n)) / math.sqrt(n)
            x = random_point(rng, n, beta, radius=2.0)
            via_ball = mobius_matvec(mat, hyperboloid_to_ball(x))
            via_hyper = hyperboloid_to_ball(lorentz_matvec(mat, x))
            assert rel_err(via_ball.coords, via_hyper.coords) <= 1e-6


class TestMobiusPointwise:
    def test_positive_coords_fixed_by_relu(self):
        y = ball_exp_origin([0.3, 0.4], 1.0)
        out = mobius_pointwise(RELU, y)
        np.testing.assert_allclose(out.coords, y.coords, atol=1e-12)

    def test_zero_point(self):
        out = mobius_pointwise(RELU, BallPoint(np.zeros(3), 1.0))
        np.testing.assert_array_equal(out.coords, np.zeros(3))

    def test_rejects_unsupported_sigma(self):
        with pytest.raises(ValueError):
            Nonlinearity("tanh")
        with pytest.raises(TypeError):
            mobius_pointwise("relu", BallPoint(np.zeros(2), 1.0))

    @pytest.mark.parametrize("sigma", [RELU, leaky_relu(0.01), leaky_relu(0.5)])
    def test_commutes_with_isomorphism(self, rng, sigma):
        for _ in range(100):
            beta = float(rng.uniform(0.5, 2.0))
            n = int(rng.integers(2, 16))
            x = random_point(rng, n, beta, radius=4.0)
            via_ball = mobius_pointwise(sigma, hyperboloid_to_ball(x))
            via_hyper = hyperboloid_to_ball(lorentz_pointwise(sigma, x))
            assert rel_err(via_ball.coords, via_hyper.coords) <= 1e-6

    def test_curvature_pairing(self, rng):
        x = random_point(rng, 3, 2.0)
        assert hyperboloid_to_ball(x).alpha == pytest.approx(0.5)


def test_distance_agrees_across_models(rng):
    # Ball distance via the isomorphism must match the hyperboloid distance:
    # d_D(x,y) = 2/sqrt(a) * artanh(sqrt(a)*||(-x) mobius+ y||) is not
    # implemented here, so check the invariant through round-tripping instead.
    beta = 1.3
    x = random_point(rng, 4, beta, radius=3.0)
    y = random_point(rng, 4, beta, radius=3.0)
    xb, yb = hyperboloid_to_ball(x), hyperboloid_to_ball(y)
    x2, y2 = ball_to_hyperboloid(xb), ball_to_hyperboloid(yb)
    assert distance(x2, y2) == pytest.approx(distance(x, y), abs=1e-9)
