"""Candidate optimal information manifolds and projection policies.

Closed-form manifolds (hyperplane, sphere) carry exact projection and
exact minimum-cost formulas; the 2-D curve solver builds a numeric graph
manifold by alternating Bregman projection with conditional-mean updates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ._kernels import affine_argmin, segment_reduce
from .curves import ScalarCurve
from .errors import ConfigurationError, PreconditionError, SolverError
from .model import ParticleCloud, ProblemSpec, QuadraticUtility, RadialUtility, Utility
from .transport import bregman_project_many, manifold_affine_scores

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def _golden_min(f, lo, hi, iters=60):
    """Golden-section minimizer; unimodal assumption, fixed iteration count."""
    a, b = float(lo), float(hi)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return (a + b) / 2.0


def _pava(y, w):
    """Weighted isotonic regression (pool adjacent violators), nondecreasing."""
    y = np.asarray(y, dtype=np.float64).copy()
    w = np.asarray(w, dtype=np.float64).copy()
    n = y.size
    vals = list(y)
    wts = list(w)
    sizes = [1] * n
    i = 0
    while i < len(vals) - 1:
        if vals[i] > vals[i + 1] + 0.0:
            tot = wts[i] + wts[i + 1]
            vals[i] = (wts[i] * vals[i] + wts[i + 1] * vals[i + 1]) / tot
            wts[i] = tot
            sizes[i] += sizes[i + 1]
            del vals[i + 1], wts[i + 1], sizes[i + 1]
            if i > 0:
                i -= 1
        else:
            i += 1
    out = np.empty(n)
    pos = 0
    for v, s in zip(vals, sizes):
        out[pos : pos + s] = v
        pos += s
    return out


# ---------------------------------------------------------------------------
# manifold variants


class Hyperplane:
    """range(A) for an idempotent policy matrix A."""

    kind = "hyperplane"

    def __init__(self, A, extent=6.0, resolution=512):
        self.A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        if self.A.shape[0] != self.A.shape[1]:
            raise ConfigurationError("hyperplane matrix must be square")
        if np.linalg.norm(self.A @ self.A - self.A) > 1e-8:
            raise ConfigurationError("hyperplane matrix must be idempotent (A^2 = A)")
        self.extent = float(extent)
        self.resolution = int(resolution)
        u, s, _ = np.linalg.svd(self.A)
        self.rank = int(np.sum(s > 1e-10))
        self._basis = u[:, : self.rank]  # orthonormal basis of range(A)

    @property
    def dim(self):
        return self.A.shape[0]

    def closed_form_project(self, utility, B):
        if not isinstance(utility, QuadraticUtility) or self.rank == 0:
            if self.rank == 0:
                pts = np.zeros_like(B)
                costs = utility.value_many(B) - utility.value(np.zeros(self.dim))
                return pts, costs
            return None
        # minimize (a - b)' H (a - b) over a = U v; unbounded if U'HU has a
        # negative direction
        U = self._basis
        Q = U.T @ utility.H @ U
        evals = np.linalg.eigvalsh(0.5 * (Q + Q.T))
        if evals.min() < -1e-12 * max(1.0, abs(evals).max()):
            pts = B @ (U @ np.linalg.pinv(Q) @ U.T @ utility.H).T
            costs = np.full(B.shape[0], -np.inf)
            return pts, costs
        P = U @ np.linalg.pinv(Q) @ U.T @ utility.H
        pts = B @ P.T
        d = pts - B
        costs = np.einsum("ni,ij,nj->n", d, utility.H, d)
        return pts, costs

    def exact_min_cost(self, utility, B):
        out = self.closed_form_project(utility, B)
        if out is None:
            return None
        return out[1]

    def discretize(self):
        if self.rank == 0:
            return np.zeros((1, self.dim))
        axis = np.linspace(-self.extent, self.extent, self.resolution)
        grids = np.meshgrid(*([axis] * self.rank), indexing="ij")
        params = np.stack([g.ravel() for g in grids], axis=1)
        return params @ self._basis.T


class Sphere:
    """Sphere of radius beta; pools are rays from the center."""

    kind = "sphere"

    def __init__(self, center, radius, resolution=4096, seed=0):
        self.center = np.atleast_1d(np.asarray(center, dtype=np.float64))
        self.radius = float(radius)
        if self.radius <= 0:
            raise ConfigurationError("sphere radius must be positive")
        self.resolution = int(resolution)
        self.seed = seed

    @property
    def dim(self):
        return self.center.size

    def _radial_lambda(self, utility):
        """lam when utility is phi(a' (lam I) a) about this sphere's center."""
        if not isinstance(utility, RadialUtility):
            return None
        if np.linalg.norm(self.center) > 1e-12:
            return None
        lam = np.trace(utility.H) / self.dim
        if np.linalg.norm(utility.H - lam * np.eye(self.dim)) > 1e-10 * max(1, lam):
            return None
        return float(lam)

    def ray_actions(self, B):
        """The ray policy beta * b / |b| (relative to the center)."""
        B = np.atleast_2d(np.asarray(B, dtype=np.float64))
        d = B - self.center
        norms = np.linalg.norm(d, axis=1)
        units = np.where(norms[:, None] > 0, d / np.maximum(norms, 1e-300)[:, None], 0)
        units[norms == 0, 0] = 1.0  # degenerate target at the center
        return self.center + self.radius * units

    def closed_form_project(self, utility, B):
        lam = self._radial_lambda(utility)
        if lam is None:
            return None
        beta = self.radius
        phi = utility.phi
        dphi = float(phi.deriv1(lam * beta * beta))
        r = np.linalg.norm(np.atleast_2d(B), axis=1)
        sign = 1.0 if dphi > 0 else -1.0
        pts = sign * self.ray_actions(B)
        costs = (
            np.asarray(phi(lam * r * r))
            - float(phi(lam * beta * beta))
            + 2.0 * lam * dphi * (beta * beta - sign * beta * r)
        )
        return pts, costs

    def exact_min_cost(self, utility, B):
        lam = self._radial_lambda(utility)
        if lam is None:
            return None
        beta = self.radius
        phi = utility.phi
        dphi = float(phi.deriv1(lam * beta * beta))
        r = np.linalg.norm(np.atleast_2d(B), axis=1)
        return (
            np.asarray(phi(lam * r * r))
            - float(phi(lam * beta * beta))
            + 2.0 * lam * dphi * beta * beta
            - 2.0 * lam * abs(dphi) * beta * r
        )

    def discretize(self):
        if self.dim == 2:
            th = np.linspace(0.0, 2.0 * np.pi, self.resolution, endpoint=False)
            return self.center + self.radius * np.stack(
                [np.cos(th), np.sin(th)], axis=1
            )
        rng = np.random.default_rng(self.seed)
        z = rng.standard_normal((self.resolution, self.dim))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        return self.center + self.radius * z

    def refine_project(self, utility, b, j):
        if self.dim != 2:
            return None
        from .transport import bregman_divergence

        th0 = 2.0 * np.pi * j / self.resolution
        dth = 2.0 * np.pi / self.resolution

        def f(t):
            a = self.center + self.radius * np.array([np.cos(t), np.sin(t)])
            return bregman_divergence(utility, a, b)

        t = _golden_min(f, th0 - dth, th0 + dth)
        return self.center + self.radius * np.array([np.cos(t), np.sin(t)])


class Graph1D:
    """Curve (phi(theta), theta) in R^2 through strictly increasing nodes."""

    kind = "graph1d"

    def __init__(self, theta, phi):
        self.theta = np.asarray(theta, dtype=np.float64)
        self.phi = np.asarray(phi, dtype=np.float64)
        if self.theta.ndim != 1 or self.theta.shape != self.phi.shape:
            raise ConfigurationError("graph nodes need equal 1-D theta and phi")
        if self.theta.size < 2 or not np.all(np.diff(self.theta) > 0):
            raise ConfigurationError("graph theta grid must strictly increase")
        if not np.all(np.isfinite(self.phi)):
            raise ConfigurationError("graph phi values must be finite")

    @property
    def dim(self):
        return 2

    def nodes(self):
        return np.stack([self.phi, self.theta], axis=1)

    def discretize(self):
        return self.nodes()

    def point_at(self, t):
        ph = np.interp(t, self.theta, self.phi)
        return np.array([ph, t])

    def refine_project(self, utility, b, j):
        from .transport import bregman_divergence

        lo = self.theta[max(j - 1, 0)]
        hi = self.theta[min(j + 1, self.theta.size - 1)]
        if hi <= lo:
            return None
        t = _golden_min(lambda s: bregman_divergence(utility, self.point_at(s), b), lo, hi)
        return self.point_at(t)


class PointCloudManifold:
    kind = "point-cloud"

    def __init__(self, points):
        self.points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if self.points.shape[0] == 0:
            raise ConfigurationError("point-cloud manifold needs at least one point")

    @property
    def dim(self):
        return self.points.shape[1]

    def discretize(self):
        return self.points


# ---------------------------------------------------------------------------
# closed-form policies


def hyperplane_policy(H, Sigma=None):
    """Linear revealing policy A = Sigma^(1/2) P+ Sigma^(-1/2).

    P+ projects onto the positive-eigenvalue directions of
    Sigma^(1/2) H Sigma^(1/2); with Sigma = I the rank of A equals the
    number of positive eigenvalues of H.
    """
    H = 0.5 * (np.atleast_2d(np.asarray(H, dtype=np.float64)) + np.atleast_2d(H).T)
    m = H.shape[0]
    if Sigma is None:
        Sigma = np.eye(m)
    Sigma = np.atleast_2d(np.asarray(Sigma, dtype=np.float64))
    evals, evecs = np.linalg.eigh(0.5 * (Sigma + Sigma.T))
    if evals.min() <= 0:
        raise ConfigurationError("hyperplane policy needs positive definite Sigma")
    s_half = evecs @ np.diag(np.sqrt(evals)) @ evecs.T
    s_half_inv = evecs @ np.diag(1.0 / np.sqrt(evals)) @ evecs.T
    conj = s_half @ H @ s_half
    w, v = np.linalg.eigh(0.5 * (conj + conj.T))
    pos = v[:, w > 1e-12]
    p_plus = pos @ pos.T
    A = s_half @ p_plus @ s_half_inv
    return Hyperplane(A)


@dataclass(frozen=True)
class SpherePolicyResult:
    manifold: Sphere
    beta: float
    condition_holds: bool
    worst_slack: float
    phi_prime_at_beta: float


def sphere_policy(
    cloud: ParticleCloud,
    utility: RadialUtility,
    moment_map,
    radius_grid=4096,
    slack_tol=1e-9,
):
    """Radius and tangency certificate for the concealing-tails sphere.

    beta is the cloud-average state norm. The certificate checks that the
    radial profile stays below its tangent at beta over a radius grid that
    covers the attainable action norms; worst_slack is the largest excess.
    """
    if not isinstance(utility, RadialUtility):
        raise PreconditionError("sphere_policy needs a radial utility")
    _check_spherical(cloud)

    norms = np.linalg.norm(cloud.points, axis=1)
    beta = float(cloud.weights @ norms)

    lam = np.trace(utility.H) / utility.dim
    if np.linalg.norm(utility.H - lam * np.eye(utility.dim)) > 1e-10 * max(1, lam):
        raise PreconditionError("sphere_policy needs an isotropic radial utility")

    g_norms = np.linalg.norm(moment_map(cloud.points), axis=1)
    r_max = float(g_norms.max())
    r = np.linspace(0.0, r_max, int(radius_grid))
    phi = utility.phi
    dphi = float(phi.deriv1(lam * beta * beta))
    slack = (
        np.asarray(phi(lam * r * r))
        - float(phi(lam * beta * beta))
        + 2.0 * lam * dphi * beta * (beta - r)
    )
    worst = float(slack.max())
    # Tangency certificate alone decides; the sign of phi' at beta is
    # reported so callers can see which projection branch is active.
    holds = worst <= slack_tol
    return SpherePolicyResult(
        Sphere(np.zeros(cloud.dim), beta), beta, holds, worst, dphi
    )


def _check_spherical(cloud):
    mean = cloud.mean()
    cov = cloud.cov()
    sigma2 = float(np.trace(cov)) / cloud.dim
    if np.linalg.norm(mean) > 3.0 * np.sqrt(sigma2 / cloud.n) * np.sqrt(cloud.dim):
        raise PreconditionError("prior cloud mean too far from the origin")
    iso_err = np.abs(cov - sigma2 * np.eye(cloud.dim)).max()
    if iso_err > 0.05 * sigma2:
        raise PreconditionError("prior cloud covariance is not isotropic within 5%")


# ---------------------------------------------------------------------------
# numeric 2-D curve solver


@dataclass
class CurveSolveInfo:
    converged: bool
    residual: float
    iterations: int
    node_masses: np.ndarray


def solve_curve_2d(
    problem: ProblemSpec,
    cloud: ParticleCloud,
    n_nodes: int = 33,
    tol: float = 1e-4,
    max_iter: int = 200,
):
    """Numeric optimal-information curve for 2-D moment problems.

    Alternates Bregman projection of the g-cloud onto the current node set
    with conditional-mean node updates, followed by an isotonic pass that
    keeps the graph ordered. Returns (Graph1D, CurveSolveInfo); a curve that
    stops improving before reaching ``tol`` comes back flagged.
    """
    if not problem.is_moment or problem.action_dim != 2:
        raise PreconditionError("solve_curve_2d needs a 2-D moment problem")
    gvals = problem.g_values(cloud)
    w = cloud.weights
    mean = w @ gvals

    hess = problem.utility.hess(mean)
    evals, evecs = np.linalg.eigh(hess)
    if evals[-1] <= 0:
        raise PreconditionError(
            "utility Hessian has no positive direction at the cloud mean"
        )
    v = evecs[:, -1]
    if abs(v[1]) < 1e-9:
        raise PreconditionError("revealing direction is orthogonal to theta axis")
    if v[1] < 0:
        v = -v

    t = (gvals - mean) @ v
    qs = np.quantile(t, (np.arange(n_nodes) + 0.5) / n_nodes)
    nodes = mean + qs[:, None] * v

    masses = np.full(n_nodes, np.nan)
    residual = np.inf
    for it in range(1, max_iter + 1):
        coefs, consts = manifold_affine_scores(problem.utility, nodes)
        labels, _ = affine_argmin(gvals, coefs, consts)
        masses, sums = segment_reduce(labels, w, gvals, nodes.shape[0])

        alive = masses > 0
        if alive.sum() < 2:
            raise SolverError("curve collapsed to fewer than two nodes")
        if not alive.all():
            warnings.warn(
                f"pruned {int((~alive).sum())} starved curve nodes", stacklevel=2
            )
        means = sums[alive] / masses[alive, None]
        m_alive = masses[alive]

        order = np.argsort(means[:, 1], kind="stable")
        means = means[order]
        m_alive = m_alive[order]
        theta, phi, m_alive = _merge_close(means[:, 1], means[:, 0], m_alive)
        phi = _pava(phi, m_alive)
        new_nodes = np.stack([phi, theta], axis=1)

        # CE residual: distance from the kept nodes to their cells' means
        coefs, consts = manifold_affine_scores(problem.utility, new_nodes)
        labels, _ = affine_argmin(gvals, coefs, consts)
        m2, s2 = segment_reduce(labels, w, gvals, new_nodes.shape[0])
        ok = m2 > 0
        residual = float(
            np.max(
                np.linalg.norm(
                    new_nodes[ok] - s2[ok] / m2[ok, None], axis=1
                )
            )
        )
        moved = float(
            np.max(np.linalg.norm(new_nodes - nodes, axis=1))
            if new_nodes.shape == nodes.shape
            else np.inf
        )
        nodes = new_nodes
        masses = m2
        if residual <= tol:
            return Graph1D(nodes[:, 1], nodes[:, 0]), CurveSolveInfo(
                True, residual, it, masses
            )
        if moved <= 1e-14:
            break

    return Graph1D(nodes[:, 1], nodes[:, 0]), CurveSolveInfo(
        False, residual, max_iter, masses
    )


def _merge_close(theta, phi, mass, min_gap=1e-10):
    """Merge nodes with duplicate theta so the graph stays a function."""
    out_t, out_p, out_m = [theta[0]], [phi[0]], [mass[0]]
    for t, p, m in zip(theta[1:], phi[1:], mass[1:]):
        if t - out_t[-1] < min_gap:
            tot = out_m[-1] + m
            out_t[-1] = (out_m[-1] * out_t[-1] + m * t) / tot
            out_p[-1] = (out_m[-1] * out_p[-1] + m * p) / tot
            out_m[-1] = tot
        else:
            out_t.append(t)
            out_p.append(p)
            out_m.append(m)
    return np.array(out_t), np.array(out_p), np.array(out_m)


# ---------------------------------------------------------------------------
# policy application


def apply_policy(problem: ProblemSpec, manifold, cloud: ParticleCloud):
    """Per-particle actions a(w) projecting g(w) onto the manifold.

    Spheres use the ray policy beta * g / |g| (the certified policy shape);
    for radial utilities with phi' > 0 at the sphere radius this coincides
    with the Bregman projection.
    """
    if not problem.is_moment:
        raise PreconditionError("apply_policy needs a moment receiver")
    B = problem.g_values(cloud)
    if isinstance(manifold, Sphere):
        return manifold.ray_actions(B)
    pts, _ = bregman_project_many(problem.utility, manifold, B)
    return pts
