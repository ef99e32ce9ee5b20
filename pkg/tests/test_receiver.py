import numpy as np
import pytest

from conftest import bisect_root, cubic_receiver
from persuade.errors import PreconditionError
from persuade.model import (
    IdentityMap,
    MomentReceiver,
    ParticleCloud,
    TabulatedPrior,
    build_cloud,
)
from persuade.receiver import lemma_bound_kappa, solve_action


def two_atoms(points, dim=1):
    pts = np.asarray(points, dtype=float).reshape(-1, dim)
    w = np.full(pts.shape[0], 1.0 / pts.shape[0])
    return ParticleCloud(pts, w)


def test_moment_action_is_weighted_mean():
    rec = MomentReceiver(IdentityMap(2))
    cloud = two_atoms([[0.0, 0.0], [2.0, 4.0]], dim=2)
    res = solve_action(rec, cloud, tol=1e-12)
    np.testing.assert_allclose(res.action, [1.0, 2.0])
    assert res.iterations == 1
    assert res.residual_norm == 0.0


def test_moment_single_atom_returns_g():
    rec = MomentReceiver(IdentityMap(2))
    cloud = ParticleCloud(np.array([[3.0, -1.0]]), np.array([1.0]))
    np.testing.assert_allclose(solve_action(rec, cloud).action, [3.0, -1.0])


def test_cubic_two_atoms_root_oracle():
    # E[G] = 1 - a^3 - a; oracle root of a^3 + a = 1 by bisection
    root = bisect_root(lambda a: a**3 + a - 1.0, 0.0, 1.0)
    assert root == pytest.approx(0.6823278, abs=1e-6)
    res = solve_action(cubic_receiver(), two_atoms([0.0, 2.0]), tol=1e-10)
    np.testing.assert_allclose(res.action, [root], atol=1e-6)
    assert res.residual_norm <= 1e-10


def test_unique_fixed_point_from_many_starts():
    from persuade.receiver import _damped_solve

    rec = cubic_receiver()
    cloud = two_atoms([-1.0, 0.5, 2.0])
    tol = 1e-11
    rng = np.random.default_rng(9)
    actions = [
        _damped_solve(rec, cloud, np.array([s]), tol).action
        for s in rng.uniform(-3, 3, size=20)
    ]
    spread = np.ptp([a[0] for a in actions])
    assert spread <= 10 * tol


def test_lemma_norm_bound():
    rec = cubic_receiver()
    cloud = two_atoms([-1.5, 0.25, 1.0, 2.0])
    res = solve_action(rec, cloud, tol=1e-10)
    fia = np.array([bisect_root(lambda a, w=w: a**3 + a - w, -3.0, 3.0) for w in
                    cloud.points[:, 0]])
    kappa = lemma_bound_kappa(rec.epsilon)
    assert np.dot(res.action, res.action) <= kappa * np.dot(
        cloud.weights, fia**2
    )


def test_empty_posterior_rejected():
    rec = MomentReceiver(IdentityMap(1))
    cloud = build_cloud(TabulatedPrior([[0.0]], [1.0]), 1, seed=0)
    with pytest.raises(PreconditionError):
        solve_action(rec, cloud, tol=-1.0)
