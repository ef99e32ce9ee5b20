import numpy as np
import pytest

from conftest import H_PROD, cubic_problem, cubic_receiver
from persuade.errors import ConfigurationError
from persuade.manifold import Hyperplane, PointCloudManifold, Sphere, hyperplane_policy
from persuade.model import (
    GaussianPrior,
    GeneralReceiver,
    IdentityMap,
    ParticleCloud,
    ProblemSpec,
    QuadraticUtility,
    RadialUtility,
    UniformBoxPrior,
)
from persuade.curves import ScalarCurve
from persuade.transport import (
    bregman_divergence,
    bregman_divergence_many,
    bregman_project,
    multiplier,
    transport_cost,
)

UTIL_PROD = QuadraticUtility(H_PROD)


def _problem(utility, receiver=None):
    return ProblemSpec(
        2, 2, GaussianPrior(np.zeros(2), np.eye(2)), IdentityMap(2), utility, receiver
    )


# ---------------------------------------------------------------------------
# divergence


def test_quadratic_identity_over_random_pairs():
    rng = np.random.default_rng(0)
    Hs = rng.normal(size=(3, 3))
    util = QuadraticUtility(Hs + Hs.T, rng.normal(size=3))
    for _ in range(1000):
        a, b = rng.normal(size=(2, 3))
        expected = (a - b) @ util.H @ (a - b)
        assert bregman_divergence(util, a, b) == pytest.approx(expected, abs=1e-10)


def test_product_utility_expansion():
    # symbolic expansion of the cost for W = a1 a2
    assert bregman_divergence(UTIL_PROD, [1.0, 2.0], [3.0, 5.0]) == pytest.approx(6.0)


def test_zero_at_equal_points():
    phi = ScalarCurve.from_poly([0.0, 1.0, -0.3])
    for util in (UTIL_PROD, RadialUtility(np.eye(2), phi)):
        a = np.array([0.7, -1.2])
        assert bregman_divergence(util, a, a) == 0.0


def test_gradient_vanishes_at_diagonal():
    rng = np.random.default_rng(4)
    util = QuadraticUtility(H_PROD, [0.3, -0.1])
    h = 1e-6
    for _ in range(20):
        a = rng.normal(size=2)
        for d in range(2):
            e = np.zeros(2)
            e[d] = h
            deriv = (
                bregman_divergence(util, a, a + e)
                - bregman_divergence(util, a, a - e)
            ) / (2 * h)
            assert abs(deriv) <= 1e-5


# ---------------------------------------------------------------------------
# transport cost


def test_revealing_the_state_costs_nothing():
    p = _problem(UTIL_PROD)
    w = np.array([0.4, -1.1])
    a = w.copy()
    x = UTIL_PROD.grad(a)
    assert transport_cost(p, a, x, w) == pytest.approx(0.0, abs=1e-12)


def test_indefinite_quadratic_plugin():
    util = QuadraticUtility(np.diag([1.0, -1.0]))
    p = _problem(util)
    assert transport_cost(p, [0.0, 0.0], [0.0, 0.0], [1.0, 1.0]) == pytest.approx(0.0)


def test_bregman_reduction_for_moment_case():
    p = _problem(UTIL_PROD)
    c = transport_cost(p, [1.0, 1.0], [1.0, 1.0], [2.0, 3.0])
    assert c == pytest.approx(2.0)
    assert c == pytest.approx(bregman_divergence(UTIL_PROD, [1.0, 1.0], [2.0, 3.0]))


# ---------------------------------------------------------------------------
# multipliers


def _cell(points):
    pts = np.asarray(points, dtype=float)
    return ParticleCloud(pts, np.full(pts.shape[0], 1.0 / pts.shape[0]))


def test_moment_multiplier_is_gradient():
    p = _problem(UTIL_PROD)
    rec = multiplier(p, _cell([[0.0, 0.0], [1.0, 1.0]]), [1.0, 2.0])
    np.testing.assert_allclose(rec.multiplier, [2.0, 1.0])
    assert rec.linear_residual() <= 1e-8


def test_general_path_matches_moment_path():
    moment = _problem(UTIL_PROD)
    wrapped = _problem(
        UTIL_PROD,
        GeneralReceiver(
            lambda a, om: a - om,
            epsilon=1.0,
            dim=2,
            jac_a=lambda a, om: np.eye(2),
        ),
    )
    cell = _cell([[0.3, 0.1], [0.9, -0.4], [0.2, 0.2]])
    a = np.array([0.5, 0.25])
    x_m = multiplier(moment, cell, a).multiplier
    x_g = multiplier(wrapped, cell, a).multiplier
    np.testing.assert_allclose(x_g, x_m, atol=1e-10)


def test_cubic_multiplier_hand_solve():
    p = cubic_problem(QuadraticUtility([[1.0]]))  # W = a^2
    rec = multiplier(p, _cell([[0.0], [1.0]]), [1.0])
    # DbarG = -4, DbarW = 2 at a = 1
    np.testing.assert_allclose(rec.bar_jac_g, [[-4.0]])
    np.testing.assert_allclose(rec.multiplier, [-0.5])
    assert rec.linear_residual() <= 1e-8


# ---------------------------------------------------------------------------
# projection


def test_sphere_projection_radial_ray():
    beta = 1.3
    phi = ScalarCurve.from_poly([0.0, 1.0, -0.2])  # phi'(beta^2) = 1 - .4*1.69 > 0
    util = RadialUtility(np.eye(2), phi)
    sphere = Sphere([0.0, 0.0], beta)
    b = np.array([3.0, 4.0])
    a, cost = bregman_project(util, sphere, b)
    np.testing.assert_allclose(a, beta * b / 5.0, atol=1e-12)
    assert cost == pytest.approx(bregman_divergence(util, a, b), abs=1e-12)


def test_hyperplane_projection_matches_grid_oracle():
    plane = hyperplane_policy(H_PROD)
    util = UTIL_PROD
    b = np.array([0.7, -0.3])
    a, cost = bregman_project(util, plane, b)
    np.testing.assert_allclose(a, plane.A @ b, atol=1e-8)
    # brute grid scan over the 1-D range of A
    u = np.array([1.0, 1.0]) / np.sqrt(2.0)
    ts = np.linspace(-4.0, 4.0, 200_001)
    costs = bregman_divergence_many(util, b, ts[:, None] * u)  # c(a, b) symmetric? no:
    costs = np.array(
        [bregman_divergence(util, t * u, b) for t in ts[:: 1000]]
    )  # coarse oracle
    assert cost <= costs.min() + 1e-6


def test_point_cloud_argmin_and_tie_break():
    manifold = PointCloudManifold([[0.0, 0.0], [1.0, 1.0]])
    a, cost = bregman_project(UTIL_PROD, manifold, [2.0, 2.0])
    np.testing.assert_allclose(a, [1.0, 1.0])
    assert cost == pytest.approx(1.0)
    # exact tie between two nodes resolves to the first
    tie = PointCloudManifold([[1.0, 0.0], [0.0, 1.0]])
    a, _ = bregman_project(UTIL_PROD, tie, [0.0, 0.0])
    np.testing.assert_allclose(a, [1.0, 0.0])


def test_projection_property_on_monotone_set():
    manifold = PointCloudManifold([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    a, cost = bregman_project(UTIL_PROD, manifold, [1.0, 1.0])
    assert cost <= 0.0
    np.testing.assert_allclose(a, [1.0, 1.0])


def test_empty_manifold_rejected():
    with pytest.raises(ConfigurationError):
        PointCloudManifold(np.zeros((0, 2)))
