"""Optimality certificates and pool geometry checks.

Each check returns a :class:`CheckEntry`; violations are normalized by the
utility scale ``max(1, range of W)`` over the relevant cloud so pass/fail
thresholds are scale invariant. A report is an ordered collection of
entries and serializes to the ``diagnostics.json`` schema.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import affine_argmax
from .errors import PreconditionError
from .model import ParticleCloud, ProblemSpec, Utility
from .partition import PartitionState, _assignment_scores
from .transport import min_cost_to_set

DEFAULT_TOL = 1e-6


@dataclass
class CheckEntry:
    check_name: str
    passed: bool
    worst_violation: float
    worst_location: np.ndarray | None
    tolerance: float
    samples_used: int
    scale: float = 1.0

    def to_json(self):
        loc = self.worst_location
        return {
            "checkName": self.check_name,
            "pass": bool(self.passed),
            "worstViolation": float(self.worst_violation),
            "worstLocation": None if loc is None else np.asarray(loc).tolist(),
            "tolerance": float(self.tolerance),
            "samplesUsed": int(self.samples_used),
        }


@dataclass
class DiagnosticsReport:
    entries: list = field(default_factory=list)

    def add(self, entry: CheckEntry):
        assert entry.passed == (entry.worst_violation <= entry.tolerance)
        self.entries.append(entry)
        return entry

    @property
    def all_pass(self):
        return all(e.passed for e in self.entries)

    def to_json(self):
        return [e.to_json() for e in self.entries]


def _entry(name, worst, location, tol, samples, scale=1.0):
    worst = float(worst)
    return CheckEntry(name, worst <= tol, worst, location, tol, samples, scale)


def utility_scale(utility: Utility, points) -> float:
    """max(1, range of W) over a reference action set."""
    vals = utility.value_many(points)
    return float(max(1.0, vals.max() - vals.min()))


# ---------------------------------------------------------------------------
# hull test sets


def hull_test_points(problem: ProblemSpec, cloud: ParticleCloud, pairs=10_000, seed=7):
    """Approximate conv(g(support)): the g-cloud plus random pair midpoints.

    Unbounded supports are truncated at the 6-sigma cloud radius.
    """
    g = problem.g_values(cloud)
    rng = np.random.default_rng(seed)
    i = rng.integers(g.shape[0], size=pairs)
    j = rng.integers(g.shape[0], size=pairs)
    mids = 0.5 * (g[i] + g[j])
    pts = np.vstack([g, mids])
    center = cloud.weights @ g
    radius = 6.0 * float(np.sqrt(np.max(np.diag(_weighted_cov(g, cloud.weights)))))
    keep = np.linalg.norm(pts - center, axis=1) <= radius
    return pts[keep]


def _weighted_cov(points, weights):
    d = points - weights @ points
    return (d * weights[:, None]).T @ d


# ---------------------------------------------------------------------------
# manifold certificates


def verify_maximality(
    utility: Utility, manifold, test_points, tol=DEFAULT_TOL
) -> CheckEntry:
    """Worst of phi_Xi(b) = min_a c(a, b) over the hull test set."""
    test_points = np.atleast_2d(test_points)
    costs = min_cost_to_set(utility, manifold, test_points)
    scale = utility_scale(utility, test_points)
    idx = int(np.argmax(costs))
    return _entry(
        "maximality",
        costs[idx] / scale,
        test_points[idx],
        tol,
        test_points.shape[0],
        scale,
    )


def verify_monotonicity(utility: Utility, samples, tol=DEFAULT_TOL) -> CheckEntry:
    """c(a1, a2) >= -tol on ordered pairs plus midpoint W-convexity."""
    samples = np.atleast_2d(samples)
    if samples.shape[0] < 2:
        return _entry("monotonicity", -np.inf, None, tol, samples.shape[0])
    vals = utility.value_many(samples)
    grads = utility.grad_many(samples)
    scale = utility_scale(utility, samples)
    worst = -np.inf
    loc = None
    n = samples.shape[0]
    for i in range(n):
        # c(a_i, b) for all b, vectorized per row
        c = vals - vals[i] + (samples[i] - samples) @ grads[i]
        c[i] = 0.0
        v = float(-c.min())
        if v > worst:
            worst = v
            loc = samples[i]
        mids = 0.5 * (samples[i] + samples)
        conv = utility.value_many(mids) - 0.5 * vals[i] - 0.5 * vals
        v = float(conv.max())
        if v > worst:
            worst = v
            loc = samples[i]
    return _entry(
        "monotonicity", worst / scale, loc, tol, n * n, scale
    )


# ---------------------------------------------------------------------------
# policy certificates


def ce_residual(
    problem: ProblemSpec,
    cloud: ParticleCloud,
    actions,
    bins: int = 64,
    tol: float = 0.02,
) -> CheckEntry:
    """Bucketed conditional-expectation defect of a policy.

    Particles are bucketed to the nearest of ``bins`` action-space
    representatives (deterministic farthest-point spread); each bucket
    contributes the mass-weighted defect | sum_i w_i (g_i - a_i) | and the
    worst bucket decides. Empty buckets are skipped.
    """
    if not problem.is_moment:
        raise PreconditionError("ce_residual needs a moment receiver")
    actions = np.atleast_2d(np.asarray(actions, dtype=np.float64))
    g = problem.g_values(cloud)
    reps = _farthest_point_reps(actions, bins)
    d2 = ((actions[:, None, :] - reps[None, :, :]) ** 2).sum(axis=2)
    bucket = np.argmin(d2, axis=1)
    worst = -np.inf
    loc = None
    used = 0
    defect = cloud.weights[:, None] * (g - actions)
    for b in range(reps.shape[0]):
        mask = bucket == b
        if not mask.any():
            continue
        used += 1
        v = float(np.linalg.norm(defect[mask].sum(axis=0)))
        if v > worst:
            worst = v
            loc = reps[b]
    return _entry("ce-residual", worst, loc, tol, used)


def _farthest_point_reps(actions, bins):
    start = int(np.argmax(np.linalg.norm(actions, axis=1)))
    chosen = [start]
    d = np.linalg.norm(actions - actions[start], axis=1)
    while len(chosen) < min(bins, actions.shape[0]):
        idx = int(np.argmax(d))
        if d[idx] <= 1e-12:
            break  # fewer distinct actions than buckets
        chosen.append(idx)
        d = np.minimum(d, np.linalg.norm(actions - actions[idx], axis=1))
    return actions[np.array(chosen)]


def verify_transport_optimality(
    problem: ProblemSpec,
    cloud: ParticleCloud,
    solution,
    tol=DEFAULT_TOL,
) -> CheckEntry:
    """Negative own transport cost and cost-minimality of the assignment.

    For a :class:`PartitionState` both conditions run against the K signal
    actions. For a per-particle action array only the own-cost condition is
    checked (a continuum policy has no finite signal set to scan).
    """
    if not problem.is_moment:
        raise PreconditionError("transport optimality check needs a moment receiver")
    g = problem.g_values(cloud)
    w_star = problem.utility.value_many(g)
    scale = utility_scale(problem.utility, g)

    if isinstance(solution, PartitionState):
        actions = solution.actions
        xs = solution.multipliers
        consts = _assignment_scores(problem, actions, xs)
        own_scores = consts[solution.labels] + np.einsum(
            "nd,nd->n", xs[solution.labels], g
        )
        _, best_scores = affine_argmax(g, xs, consts)
        own_cost = w_star - own_scores
        min_cost = w_star - best_scores
        viol = np.maximum(own_cost, own_cost - min_cost)
        idx = int(np.argmax(viol))
        return _entry(
            "transport-optimality",
            viol[idx] / scale,
            cloud.points[idx],
            tol,
            cloud.n,
            scale,
        )

    actions = np.atleast_2d(np.asarray(solution, dtype=np.float64))
    xs = problem.utility.grad_many(actions)
    own_cost = (
        w_star
        - problem.utility.value_many(actions)
        + np.einsum("nd,nd->n", xs, actions - g)
    )
    idx = int(np.argmax(own_cost))
    return _entry(
        "transport-optimality",
        own_cost[idx] / scale,
        cloud.points[idx],
        tol,
        cloud.n,
        scale,
    )


def pool_inequality(
    problem: ProblemSpec,
    cloud: ParticleCloud,
    state: PartitionState,
    sample_pairs: int = 1000,
    t_grid: int = 11,
    tol=DEFAULT_TOL,
    seed: int = 11,
) -> CheckEntry:
    """In-pool chord condition for random same-pool state pairs."""
    if not problem.is_moment:
        raise PreconditionError("pool inequality needs a moment receiver")
    g = problem.g_values(cloud)
    scale = utility_scale(problem.utility, g)
    rng = np.random.default_rng(seed)
    ts = np.linspace(0.0, 1.0, t_grid)

    cells = [np.flatnonzero(state.labels == k) for k in range(state.K)]
    cells = [c for c in cells if c.size >= 2]
    if not cells:
        return _entry("pool-inequality", -np.inf, None, tol, 0, scale)
    worst = -np.inf
    loc = None
    masses = np.array([c.size for c in cells], dtype=np.float64)
    pick = rng.choice(len(cells), size=sample_pairs, p=masses / masses.sum())
    for ci in pick:
        idx = cells[ci]
        i, j = rng.choice(idx, size=2, replace=False)
        k = state.labels[i]
        a = state.actions[k]
        x = state.multipliers[k]
        wa = problem.utility.value(a)
        g1, g2 = g[i], g[j]
        mix = ts[:, None] * g1 + (1.0 - ts)[:, None] * g2
        lhs = (
            problem.utility.value_many(mix)
            + ts * (x @ (a - g1) - wa)
            + (1.0 - ts) * (x @ (a - g2) - wa)
        )
        v = float(lhs.max())
        if v > worst:
            worst = v
            loc = g1
    return _entry(
        "pool-inequality", worst / scale, loc, tol, sample_pairs * t_grid, scale
    )


def law_of_total_expectation(
    problem: ProblemSpec, cloud: ParticleCloud, state: PartitionState, tol=1e-8
) -> CheckEntry:
    """| sum_k P_k a_k - E[g] | for moment solutions."""
    g = problem.g_values(cloud)
    lhs = state.masses @ state.actions
    rhs = cloud.weights @ g
    v = float(np.linalg.norm(lhs - rhs))
    return _entry("law-of-total-expectation", v, lhs, tol, cloud.n)


# ---------------------------------------------------------------------------
# geometry


def nu_counts(hess, zero_tol=1e-10):
    """(nu_plus, nu_zero, nu_minus) eigenvalue signature of a symmetric matrix."""
    hess = np.atleast_2d(np.asarray(hess, dtype=np.float64))
    if not np.allclose(hess, hess.T, atol=1e-8 * max(1.0, np.abs(hess).max())):
        raise PreconditionError("nu_counts needs a symmetric matrix")
    evals = np.linalg.eigvalsh(0.5 * (hess + hess.T))
    plus = int(np.sum(evals > zero_tol))
    zero = int(np.sum(np.abs(evals) <= zero_tol))
    return plus, zero, len(evals) - plus - zero


def pool_dimension(
    problem: ProblemSpec,
    cloud: ParticleCloud,
    state: PartitionState,
    rel_threshold: float = 0.05,
) -> CheckEntry:
    """Affine dimension of each pool's g-image against the curvature bound.

    Per cell with at least M+1 particles, the weighted singular spectrum of
    the centered g-values estimates the pool dimension (directions below
    ``rel_threshold`` of the leading one count as collapsed); the bound is
    M - nu_plus(Hessian at the cell action).
    """
    if not problem.is_moment:
        raise PreconditionError("pool dimension needs a moment receiver")
    g = problem.g_values(cloud)
    m = problem.action_dim
    worst = -np.inf
    loc = None
    checked = 0
    for k in range(state.K):
        mask = state.labels == k
        if mask.sum() < m + 1:
            continue
        checked += 1
        w = cloud.weights[mask]
        pts = g[mask]
        mean = (w / w.sum()) @ pts
        scaled = (pts - mean) * np.sqrt(w / w.sum())[:, None]
        svals = np.linalg.svd(scaled, compute_uv=False)
        if svals[0] <= 1e-12:
            est = 0
        else:
            est = int(np.sum(svals >= rel_threshold * svals[0]))
        plus, _, _ = nu_counts(problem.utility.hess(state.actions[k]))
        v = float(est - (m - plus))
        if v > worst:
            worst = v
            loc = state.actions[k]
    if checked == 0:
        worst = -np.inf  # vacuous pass: no cell is large enough to measure
    return _entry("pool-dimension", worst, loc, 0.0, checked)


def concave_along_rays(
    utility: Utility,
    K: float,
    eps_cone: float,
    direction_grid: int = 64,
    cone_samples: int = 8,
    seed: int = 3,
) -> bool:
    """Whether b' D_aa W(a) b < 0 for large |a| and b near the ray of a."""
    if not (0.0 < eps_cone < 1.0):
        raise PreconditionError("eps_cone must lie in (0, 1)")
    m = utility.dim
    rng = np.random.default_rng(seed)
    if m == 2:
        th = np.linspace(0.0, 2.0 * np.pi, direction_grid, endpoint=False)
        dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
    else:
        dirs = rng.standard_normal((direction_grid, m))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    alpha_max = np.arccos(1.0 - eps_cone)
    for d in dirs:
        for r in (K, 2.0 * K, 4.0 * K):
            a = r * d
            H = utility.hess(a)
            for _ in range(cone_samples):
                u = rng.standard_normal(m)
                u -= (u @ d) * d
                nu = np.linalg.norm(u)
                if nu < 1e-12:
                    continue
                alpha = rng.uniform(0.0, alpha_max * 0.999)
                b = np.cos(alpha) * d + np.sin(alpha) * (u / nu)
                if b @ H @ b >= 0.0:
                    return False
            if d @ H @ d >= 0.0:
                return False
    return True


# ---------------------------------------------------------------------------
# application pool coefficients


def application_pool_coeffs(variant, tol=DEFAULT_TOL, **kw):
    """Pool-slope coefficient tables for the product-information models.

    ``single``: kappa1 = -(f G')'/G' and kappa2 = f - a2 kappa1 along the
    curve's theta grid, plus the ordering certificate that f (G')^(1/2) is
    nondecreasing.
    ``multi_product``: kappa1 = -(Jacobian of f)^T at each sample with a
    negative-semidefiniteness certificate (uniform acceptance rates).
    ``multi_type``: the averaged slope sum_i kappa_i G_i' with the
    downward-sloping-on-average certificate (all G_i strictly curved).
    """
    if variant == "single":
        return _single_coeffs(tol=tol, **kw)
    if variant == "multi_product":
        return _multi_product_coeffs(tol=tol, **kw)
    if variant == "multi_type":
        return _multi_type_coeffs(tol=tol, **kw)
    raise PreconditionError(f"unknown pool coefficient variant {variant!r}")


def _grid_deriv(theta, vals):
    return np.gradient(vals, theta, edge_order=2)


def _single_coeffs(theta, f_vals, curve, tol=DEFAULT_TOL):
    theta = np.asarray(theta, dtype=np.float64)
    f_vals = np.asarray(f_vals, dtype=np.float64)
    gp = np.asarray(curve.deriv1(theta))
    if np.any(gp <= 0):
        kappa1 = np.full_like(theta, np.nan)
        kappa2 = np.full_like(theta, np.nan)
        entry = _entry("single-ordering", np.inf, None, tol, theta.size)
        return {"kappa1": kappa1, "kappa2": kappa2, "entry": entry}
    kappa1 = -_grid_deriv(theta, f_vals * gp) / gp
    kappa2 = f_vals - theta * kappa1
    ordered = f_vals * np.sqrt(gp)
    viol = float(np.max(-np.diff(ordered), initial=-np.inf))
    entry = _entry("single-ordering", viol, None, tol, theta.size)
    return {"kappa1": kappa1, "kappa2": kappa2, "entry": entry}


def _multi_product_coeffs(points, f, tol=DEFAULT_TOL, fd_step=1e-5):
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n_prod = points.shape[1]
    worst = -np.inf
    loc = None
    kappas = []
    for p in points:
        J = _fd_jacobian(f, p, fd_step)
        kappa1 = -J.T
        kappas.append(kappa1)
        evals = np.linalg.eigvalsh(0.5 * (kappa1 + kappa1.T))
        v = float(evals.max())
        if v > worst:
            worst = v
            loc = p
    entry = _entry("multi-product-nsd", worst, loc, tol, points.shape[0])
    return {"kappa1": np.stack(kappas), "entry": entry}


def _fd_jacobian(f, x, h):
    x = np.asarray(x, dtype=np.float64)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h))
    return np.stack(cols, axis=1)


def _multi_type_coeffs(points, f, curves, tol=DEFAULT_TOL, fd_step=1e-5):
    """Averaged pool slope for multiple customer types.

    kappa_i = (f G_i'')^(-1) (G_i' - df_i A / (1 + B)) with
    A = sum_i G_i'^2/(f G_i'') and B = sum_i G_i' df_i/(f G_i''); the
    certificate is sum_i kappa_i G_i' >= -tol at every sample.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    worst = -np.inf
    loc = None
    rows = []
    for p in points:
        fv = float(f(p))
        df = _fd_jacobian(lambda q: np.array([f(q)]), p, fd_step)[0]
        gp = np.array([float(c.deriv1(p[i])) for i, c in enumerate(curves)])
        gpp = np.array([float(c.deriv2(p[i])) for i, c in enumerate(curves)])
        if np.any(gpp == 0):
            raise PreconditionError("multi_type needs strictly curved G_i")
        denom = fv * gpp
        A = float(np.sum(gp**2 / denom))
        B = float(np.sum(gp * df / denom))
        kappa = (gp - df * A / (1.0 + B)) / denom
        rows.append(kappa)
        v = float(-(kappa @ gp))
        if v > worst:
            worst = v
            loc = p
    entry = _entry("multi-type-average-slope", worst, loc, tol, points.shape[0])
    return {"kappa": np.stack(rows), "entry": entry}
