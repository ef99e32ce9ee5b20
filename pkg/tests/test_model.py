import numpy as np
import pytest

from conftest import bisect_root, cubic_receiver
from persuade.curves import ScalarCurve
from persuade.errors import ConfigurationError
from persuade.model import (
    ComponentwisePolyMap,
    CustomUtility,
    GaussianPrior,
    IdentityMap,
    LinearMap,
    MixturePrior,
    MomentReceiver,
    MultiProductUtility,
    ParticleCloud,
    ProductAcceptanceUtility,
    QuadraticUtility,
    RadialScaledMap,
    RadialUtility,
    TabulatedPrior,
    UniformBoxPrior,
    build_cloud,
    check_receiver_monotonicity,
    eval_W,
    eval_g,
    fd_grad,
    full_info_action,
)

# ---------------------------------------------------------------------------
# clouds


def test_uniform_grid_midpoints():
    cloud = build_cloud(UniformBoxPrior([0.0], [1.0]), 2, seed=0, mode="grid")
    np.testing.assert_allclose(cloud.points[:, 0], [0.25, 0.75])
    np.testing.assert_allclose(cloud.weights, [0.5, 0.5])


def test_gaussian_sample_mean_within_clt_bound():
    n = 100_000
    cloud = build_cloud(GaussianPrior(np.zeros(2), np.eye(2)), n, seed=42)
    bound = 3.0 / np.sqrt(n)
    assert np.all(np.abs(cloud.mean()) < max(bound, 0.02))
    np.testing.assert_allclose(cloud.cov(), np.eye(2), atol=0.02)


@pytest.mark.parametrize(
    "prior",
    [
        GaussianPrior([1.0, -1.0], [[2.0, 0.3], [0.3, 1.0]]),
        UniformBoxPrior([0.0, -1.0], [1.0, 2.0]),
        MixturePrior([0.3, 0.7], [([0.0], [[1.0]]), ([3.0], [[0.5]])]),
        TabulatedPrior([[0.0], [1.0], [2.0]], [0.2, 0.3, 0.5]),
    ],
)
def test_same_seed_same_cloud(prior):
    a = build_cloud(prior, 500, seed=7)
    b = build_cloud(prior, 500, seed=7)
    assert np.array_equal(a.points, b.points)
    assert np.array_equal(a.weights, b.weights)
    c = build_cloud(prior, 500, seed=8)
    assert not np.array_equal(a.points, c.points)


def test_gaussian_grid_recovers_moments():
    prior = GaussianPrior([1.0, 2.0], [[1.5, 0.4], [0.4, 0.8]])
    cloud = build_cloud(prior, 10_000, seed=0, mode="grid")
    np.testing.assert_allclose(cloud.mean(), prior.mean, atol=1e-6)
    np.testing.assert_allclose(cloud.cov(), prior.cov, atol=1e-3)


def test_cloud_invariants_enforced():
    with pytest.raises(ConfigurationError):
        ParticleCloud(np.zeros((2, 1)), np.array([0.5, 0.6]))
    with pytest.raises(ConfigurationError):
        ParticleCloud(np.zeros((2, 1)), np.array([1.0, 0.0]))
    with pytest.raises(ConfigurationError):
        GaussianPrior([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]])  # indefinite


# ---------------------------------------------------------------------------
# utilities


def test_eval_w_product_quadratic():
    util = QuadraticUtility([[0.0, 0.5], [0.5, 0.0]])
    v, g, h = eval_W(util, [1.0, 2.0])
    assert v == pytest.approx(2.0)
    np.testing.assert_allclose(g, [2.0, 1.0])
    np.testing.assert_allclose(h, [[0.0, 1.0], [1.0, 0.0]])


def test_eval_w_product_acceptance_bilinear():
    util = ProductAcceptanceUtility([ScalarCurve.identity()])
    v, g, _ = eval_W(util, [3.0, 0.2])
    assert v == pytest.approx(0.6)
    np.testing.assert_allclose(g, [0.2, 3.0])


def test_custom_fd_gradient_matches_analytic():
    util = CustomUtility(lambda a: a[0] * a[1], dim=2)
    v, g, h = eval_W(util, [1.0, 2.0])
    assert v == pytest.approx(2.0)
    np.testing.assert_allclose(g, [2.0, 1.0], atol=1e-6)
    np.testing.assert_allclose(h, [[0.0, 1.0], [1.0, 0.0]], atol=1e-4)


def _variants():
    rng = np.random.default_rng(0)
    H = rng.normal(size=(3, 3))
    yield QuadraticUtility(H + H.T, rng.normal(size=3))
    yield ProductAcceptanceUtility(
        [ScalarCurve.from_poly([0.1, 1.0, 0.0, 0.05]), ScalarCurve.identity()]
    )
    yield MultiProductUtility([ScalarCurve.from_poly([0.0, 1.0, 0.2])])
    yield RadialUtility(np.eye(2) * 1.5, ScalarCurve.from_poly([0.0, 0.5, -0.25]))


@pytest.mark.parametrize("util", list(_variants()), ids=lambda u: type(u).__name__)
def test_analytic_gradients_match_fd(util):
    rng = np.random.default_rng(13)
    for _ in range(100):
        a = rng.normal(scale=1.5, size=util.dim)
        g = util.grad(a)
        g_fd = fd_grad(util.value, a)
        np.testing.assert_allclose(g, g_fd, rtol=1e-5, atol=1e-7)


@pytest.mark.parametrize("util", list(_variants()), ids=lambda u: type(u).__name__)
def test_vectorized_evaluations_match_scalar(util):
    rng = np.random.default_rng(3)
    A = rng.normal(size=(50, util.dim))
    np.testing.assert_allclose(
        util.value_many(A), [util.value(a) for a in A], rtol=1e-12
    )
    np.testing.assert_allclose(
        util.grad_many(A), [util.grad(a) for a in A], rtol=1e-12
    )


# ---------------------------------------------------------------------------
# moment maps


def test_eval_g_identity():
    np.testing.assert_allclose(
        eval_g(IdentityMap(2), [1.0, -2.0]), [1.0, -2.0]
    )


def test_eval_g_linear_average():
    np.testing.assert_allclose(
        eval_g(LinearMap([[0.5, 0.5]]), [1.0, 3.0]), [2.0]
    )


def test_eval_g_radial_unit_psi():
    m = RadialScaledMap(2, ScalarCurve.constant(1.0))
    np.testing.assert_allclose(eval_g(m, [3.0, 4.0]), [3.0, 4.0])


def test_componentwise_poly_map_jacobian():
    m = ComponentwisePolyMap(
        [ScalarCurve.from_poly([0.0, 2.0]), ScalarCurve.from_poly([1.0, 0.0, 1.0])]
    )
    np.testing.assert_allclose(eval_g(m, [1.0, 2.0]), [2.0, 5.0])
    np.testing.assert_allclose(m.jacobian([1.0, 2.0]), [[2.0, 0.0], [0.0, 4.0]])


# ---------------------------------------------------------------------------
# full-information actions


def test_full_info_action_moment_is_g():
    rec = MomentReceiver(IdentityMap(2))
    np.testing.assert_allclose(full_info_action(rec, [1.0, 2.0]), [1.0, 2.0])


def test_full_info_action_cubic_integer_root():
    a = full_info_action(cubic_receiver(), [2.0])
    np.testing.assert_allclose(a, [1.0], atol=1e-9)


def test_full_info_action_cubic_bisection_oracle():
    # independent oracle: bisect a^3 + a = 0.5 on [0, 1]
    root = bisect_root(lambda a: a**3 + a - 0.5, 0.0, 1.0)
    assert root == pytest.approx(0.4238537, abs=1e-6)
    a = full_info_action(cubic_receiver(), [0.5])
    np.testing.assert_allclose(a, [root], atol=1e-6)


def test_moment_full_info_equals_eval_g_everywhere():
    m = RadialScaledMap(2, ScalarCurve.from_poly([1.0, 0.1]))
    rec = MomentReceiver(m)
    rng = np.random.default_rng(5)
    for _ in range(25):
        w = rng.normal(size=2)
        np.testing.assert_array_equal(full_info_action(rec, w), eval_g(m, w))


def test_receiver_monotonicity_spot_check():
    cloud = build_cloud(UniformBoxPrior([-2.0], [2.0]), 64, seed=1)
    worst = check_receiver_monotonicity(cubic_receiver(), cloud, seed=2)
    assert worst >= 1.0  # modulus of w - a^3 - a is exactly 1


# ---------------------------------------------------------------------------
# curves


def test_table_curve_monotone_and_linear_extrapolation():
    x = np.array([0.0, 1.0, 2.0, 3.0])
    y = np.array([0.0, 0.5, 0.7, 2.0])
    c = ScalarCurve.from_table(x, y)
    fine = np.linspace(0.0, 3.0, 301)
    assert np.all(np.diff(c(fine)) >= -1e-12)  # monotone data stays monotone
    s_hi = c.deriv1(3.0)
    assert c(4.0) == pytest.approx(2.0 + s_hi)  # linear beyond the table
    assert c.deriv1(5.0) == pytest.approx(s_hi)
    assert c.deriv2(5.0) == pytest.approx(0.0)


def test_table_curve_rejects_unsorted():
    with pytest.raises(ConfigurationError):
        ScalarCurve.from_table([0.0, 0.0, 1.0], [1.0, 2.0, 3.0])
