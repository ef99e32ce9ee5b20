import numpy as np
import pytest

from persuade.curves import ScalarCurve
from persuade.model import (
    GaussianPrior,
    GeneralReceiver,
    IdentityMap,
    MomentReceiver,
    ProblemSpec,
    ProductAcceptanceUtility,
    QuadraticUtility,
    RadialScaledMap,
    RadialUtility,
    UniformBoxPrior,
    build_cloud,
)

H_PROD = np.array([[0.0, 0.5], [0.5, 0.0]])  # W(a) = a1 a2


@pytest.fixture(scope="session")
def quad_prod_problem():
    """2-D standard gaussian prior with W = a1 a2."""
    prior = GaussianPrior(np.zeros(2), np.eye(2))
    mmap = IdentityMap(2)
    return ProblemSpec(2, 2, prior, mmap, QuadraticUtility(H_PROD))


@pytest.fixture(scope="session")
def lobbyist_problem():
    """Radial lobbyist utility phi(x) = (2a-1)x - g x^2, a=.75, g=.25."""
    prior = GaussianPrior(np.zeros(2), np.eye(2))
    mmap = RadialScaledMap(2, ScalarCurve.constant(1.0))
    phi = ScalarCurve.from_poly([0.0, 0.5, -0.25])
    return ProblemSpec(2, 2, prior, mmap, RadialUtility(np.eye(2), phi))


@pytest.fixture(scope="session")
def rayo_segal_problem():
    """W = a1 G(a2) with uniform acceptance G(x) = x on the unit square."""
    prior = UniformBoxPrior([0.0, 0.0], [1.0, 1.0])
    mmap = IdentityMap(2)
    return ProblemSpec(2, 2, prior, mmap, ProductAcceptanceUtility([ScalarCurve.identity()]))


def cubic_receiver():
    """Scalar G(a, w) = w - a^3 - a; monotone with modulus 1."""

    def evaluator(a, omegas):
        return omegas - a[0] ** 3 - a[0]

    def jac_a(a, omega):
        return np.array([[-3.0 * a[0] ** 2 - 1.0]])

    def jac_omega(a, omega):
        return np.array([[1.0]])

    return GeneralReceiver(evaluator, epsilon=1.0, dim=1, jac_a=jac_a, jac_omega=jac_omega)


def cubic_problem(utility=None):
    prior = UniformBoxPrior([-2.0], [2.0])
    mmap = IdentityMap(1)
    util = utility or QuadraticUtility([[1.0]])
    return ProblemSpec(1, 1, prior, mmap, util, cubic_receiver())


@pytest.fixture(scope="session")
def small_cloud(quad_prod_problem):
    return build_cloud(quad_prod_problem.prior, 400, seed=5, mode="sample")


def bisect_root(f, lo, hi, iters=200):
    """Test-side bisection oracle for scalar roots."""
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if flo * fm <= 0:
            hi = mid
        else:
            lo = mid
            flo = fm
    return 0.5 * (lo + hi)
