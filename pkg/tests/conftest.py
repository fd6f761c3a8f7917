import numpy as np
import pytest

from lgcn.hyperboloid import HyperPoint, TangentVector, exp_origin


def random_tangent(rng: np.random.Generator, n: int, beta: float, radius: float = 3.0) -> TangentVector:
    """Tangent vector with a uniform random norm in [0, radius].

    Radii stay modest on purpose: the on-manifold constraint is checked in
    absolute terms and float64 cancellation in <x,x>_L grows like
    beta*cosh^2(r/sqrt(beta))*eps, which crosses 1e-9 around r ~ 8.
    """
    direction = rng.standard_normal(n)
    norm = np.linalg.norm(direction)
    if norm == 0.0:
        direction[0] = 1.0
        norm = 1.0
    return TangentVector.from_spatial(direction / norm * rng.uniform(0.0, radius), beta)


def random_point(rng: np.random.Generator, n: int, beta: float, radius: float = 3.0) -> HyperPoint:
    return exp_origin(random_tangent(rng, n, beta, radius))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
