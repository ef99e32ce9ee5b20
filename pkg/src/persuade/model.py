"""Persuasion problem instances.

A problem bundles a prior over states in ``R^L``, a moment map ``g`` into
action space ``R^M``, the sender's utility ``W(a)`` and the receivers'
optimality condition ``G(a, w)``. Priors are carried as weighted particle
clouds throughout; every expectation in the package is a weighted sum over
such a cloud.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curves import ScalarCurve
from .errors import ConfigurationError, NumericDomainError, PreconditionError

_EPS3 = np.finfo(float).eps ** (1.0 / 3.0)
GAUSS_GRID_RADIUS = 6.0  # per-axis truncation in whitened units; mass loss < 1e-8


# ---------------------------------------------------------------------------
# finite differences (central; step balances truncation vs rounding)


def fd_step(x):
    return _EPS3 * np.maximum(1.0, np.abs(x))


def fd_grad(f, x):
    x = np.asarray(x, dtype=np.float64)
    g = np.empty_like(x)
    h = fd_step(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h[i])
    return g


def fd_hess(f, x):
    """Symmetric 4-point stencil; (i, j) and (j, i) share evaluations."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    h = fd_step(x)
    out = np.empty((n, n))
    f0 = f(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        out[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / h[i] ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h[j]
            v = (
                f(x + ei + ej)
                - f(x + ei - ej)
                - f(x - ei + ej)
                + f(x - ei - ej)
            ) / (4.0 * h[i] * h[j])
            out[i, j] = v
            out[j, i] = v
    return out


# ---------------------------------------------------------------------------
# priors


def _check_spd(cov):
    cov = np.asarray(cov, dtype=np.float64)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ConfigurationError("covariance must be a square matrix")
    if not np.allclose(cov, cov.T, atol=1e-12):
        raise ConfigurationError("covariance must be symmetric")
    w = np.linalg.eigvalsh(cov)
    if w.min() <= 0.0:
        raise ConfigurationError(
            f"covariance not positive definite (min eigenvalue {w.min():g})"
        )
    return cov


class GaussianPrior:
    def __init__(self, mean, cov):
        self.mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
        self.cov = _check_spd(np.atleast_2d(cov))
        if self.cov.shape[0] != self.mean.size:
            raise ConfigurationError("gaussian mean/covariance dimensions differ")
        self._chol = np.linalg.cholesky(self.cov)

    @property
    def dim(self):
        return self.mean.size

    def sample(self, n, rng):
        z = rng.standard_normal((n, self.dim))
        return self.mean + z @ self._chol.T

    def grid(self, n):
        pts, w = _box_grid(self.dim, n, -GAUSS_GRID_RADIUS, GAUSS_GRID_RADIUS)
        logw = -0.5 * np.sum(pts**2, axis=1)
        w = w * np.exp(logw - logw.max())
        return self.mean + pts @ self._chol.T, w / w.sum()


class UniformBoxPrior:
    def __init__(self, lo, hi):
        self.lo = np.atleast_1d(np.asarray(lo, dtype=np.float64))
        self.hi = np.atleast_1d(np.asarray(hi, dtype=np.float64))
        if self.lo.shape != self.hi.shape or np.any(self.hi <= self.lo):
            raise ConfigurationError("uniform box needs lo < hi per axis")

    @property
    def dim(self):
        return self.lo.size

    def sample(self, n, rng):
        return rng.uniform(self.lo, self.hi, size=(n, self.dim))

    def grid(self, n):
        pts, w = _box_grid(self.dim, n, 0.0, 1.0)
        return self.lo + pts * (self.hi - self.lo), w


class MixturePrior:
    """Finite mixture of gaussians."""

    def __init__(self, weights, components):
        self.weights = np.asarray(weights, dtype=np.float64)
        if np.any(self.weights <= 0):
            raise ConfigurationError("mixture weights must be positive")
        self.weights = self.weights / self.weights.sum()
        self.components = [GaussianPrior(m, c) for m, c in components]
        if len(self.components) != self.weights.size:
            raise ConfigurationError("mixture weights/components length mismatch")
        dims = {c.dim for c in self.components}
        if len(dims) != 1:
            raise ConfigurationError("mixture components disagree on dimension")

    @property
    def dim(self):
        return self.components[0].dim

    def sample(self, n, rng):
        comp = rng.choice(len(self.components), size=n, p=self.weights)
        z = rng.standard_normal((n, self.dim))
        out = np.empty((n, self.dim))
        for k, c in enumerate(self.components):
            sel = comp == k
            out[sel] = c.mean + z[sel] @ c._chol.T
        return out

    def grid(self, n):
        parts, ws = [], []
        for wk, c in zip(self.weights, self.components):
            nk = max(1, int(round(n * wk)))
            p, w = c.grid(nk)
            parts.append(p)
            ws.append(w * wk)
        pts = np.vstack(parts)
        w = np.concatenate(ws)
        return pts, w / w.sum()


class TabulatedPrior:
    """Fixed discrete carrier: grid mode returns the table itself."""

    def __init__(self, points, weights):
        self.points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        self.weights = np.asarray(weights, dtype=np.float64)
        if self.weights.shape != (self.points.shape[0],):
            raise ConfigurationError("tabulated prior weights/points mismatch")
        if np.any(self.weights <= 0):
            raise ConfigurationError("tabulated prior weights must be positive")
        self.weights = self.weights / self.weights.sum()

    @property
    def dim(self):
        return self.points.shape[1]

    def sample(self, n, rng):
        idx = rng.choice(self.points.shape[0], size=n, p=self.weights)
        return self.points[idx]

    def grid(self, n):
        return self.points.copy(), self.weights.copy()


def _box_grid(dim, n, lo, hi):
    """Midpoint tensor grid with ~n total nodes on [lo, hi]^dim."""
    m = max(1, int(round(n ** (1.0 / dim))))
    axis = lo + (np.arange(m) + 0.5) * (hi - lo) / m
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    w = np.full(pts.shape[0], 1.0 / pts.shape[0])
    return pts, w


# ---------------------------------------------------------------------------
# particle clouds


@dataclass(frozen=True)
class ParticleCloud:
    """Weighted point representation of a prior or posterior."""

    points: np.ndarray  # (n, L)
    weights: np.ndarray  # (n,), positive, sums to 1
    seed: int = 0
    source_kind: str = "sampled"

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        w = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        if w.shape != (pts.shape[0],):
            raise ConfigurationError("cloud weights/points length mismatch")
        if np.any(w <= 0.0):
            raise ConfigurationError("cloud weights must be strictly positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ConfigurationError("cloud weights must sum to 1 within 1e-12")
        if not np.all(np.isfinite(pts)):
            raise ConfigurationError("cloud points must be finite")

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    def mean(self):
        return self.weights @ self.points

    def cov(self):
        d = self.points - self.mean()
        return (d * self.weights[:, None]).T @ d

    def subcloud(self, mask):
        w = self.weights[mask]
        return ParticleCloud(self.points[mask], w / w.sum(), self.seed, "subcloud")


def build_cloud(prior, n, seed, mode="sample"):
    """Discretize a prior into a particle cloud.

    ``sample`` draws n points with a seeded generator (identical seed gives a
    bit-identical cloud); ``grid`` builds a deterministic midpoint tensor grid
    (bounded supports and 6-sigma-truncated gaussians only). Grid mode may
    return slightly fewer or more than n points when n is not a perfect
    dim-th power.
    """
    if n < 1:
        raise PreconditionError("build_cloud needs n >= 1")
    if mode == "sample":
        rng = np.random.default_rng(seed)
        pts = prior.sample(n, rng)
        w = np.full(n, 1.0 / n)
        return ParticleCloud(pts, w / w.sum(), seed, "sampled")
    if mode == "grid":
        pts, w = prior.grid(n)
        return ParticleCloud(pts, w / w.sum(), seed, "deterministic-grid")
    raise ConfigurationError(f"unknown cloud mode {mode!r}")


# ---------------------------------------------------------------------------
# moment maps


class MomentMap:
    """Base: maps state rows (n, L) to action-space rows (n, M)."""

    out_dim: int

    def __call__(self, omegas):
        raise NotImplementedError

    def single(self, omega):
        return self(np.atleast_2d(np.asarray(omega, dtype=np.float64)))[0]

    def jacobian(self, omega):
        """d g / d omega at a single state, (M, L)."""
        omega = np.asarray(omega, dtype=np.float64)
        cols = []
        h = fd_step(omega)
        for i in range(omega.size):
            e = np.zeros_like(omega)
            e[i] = h[i]
            cols.append((self.single(omega + e) - self.single(omega - e)) / (2 * h[i]))
        return np.stack(cols, axis=1)


class IdentityMap(MomentMap):
    def __init__(self, dim):
        self.out_dim = dim

    def __call__(self, omegas):
        return np.atleast_2d(np.asarray(omegas, dtype=np.float64))

    def jacobian(self, omega):
        return np.eye(self.out_dim)


class LinearMap(MomentMap):
    def __init__(self, B):
        self.B = np.atleast_2d(np.asarray(B, dtype=np.float64))
        self.out_dim = self.B.shape[0]

    def __call__(self, omegas):
        return np.atleast_2d(omegas) @ self.B.T

    def jacobian(self, omega):
        return self.B.copy()


class RadialScaledMap(MomentMap):
    """g(w) = w * psi(|w|^2) with psi a scalar curve (psi == 1: identity)."""

    def __init__(self, dim, psi: ScalarCurve):
        self.out_dim = dim
        self.psi = psi

    def __call__(self, omegas):
        omegas = np.atleast_2d(np.asarray(omegas, dtype=np.float64))
        r2 = np.sum(omegas**2, axis=1)
        return omegas * np.asarray(self.psi(r2))[:, None]

    def jacobian(self, omega):
        omega = np.asarray(omega, dtype=np.float64)
        r2 = float(np.sum(omega**2))
        return float(self.psi(r2)) * np.eye(omega.size) + 2.0 * float(
            self.psi.deriv1(r2)
        ) * np.outer(omega, omega)


class ComponentwisePolyMap(MomentMap):
    """g_i(w) = p_i(w_i), one scalar curve per coordinate."""

    def __init__(self, curves):
        self.curves = list(curves)
        self.out_dim = len(self.curves)

    def __call__(self, omegas):
        omegas = np.atleast_2d(np.asarray(omegas, dtype=np.float64))
        return np.stack(
            [np.asarray(c(omegas[:, i])) for i, c in enumerate(self.curves)], axis=1
        )

    def jacobian(self, omega):
        omega = np.asarray(omega, dtype=np.float64)
        return np.diag([float(c.deriv1(omega[i])) for i, c in enumerate(self.curves)])


def eval_g(moment_map: MomentMap, omega):
    """Moment map at one state; finite (M,) vector."""
    out = moment_map.single(omega)
    if not np.all(np.isfinite(out)):
        raise NumericDomainError("moment map produced non-finite values")
    return out


# ---------------------------------------------------------------------------
# sender utilities


class Utility:
    """Sender utility W(a) with analytic or finite-difference derivatives."""

    dim: int

    def value(self, a) -> float:
        raise NotImplementedError

    def grad(self, a) -> np.ndarray:
        return fd_grad(self.value, np.asarray(a, dtype=np.float64))

    def hess(self, a) -> np.ndarray:
        h = fd_hess(self.value, np.asarray(a, dtype=np.float64))
        return 0.5 * (h + h.T)

    def value_many(self, A) -> np.ndarray:
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        return np.array([self.value(a) for a in A])

    def grad_many(self, A) -> np.ndarray:
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        return np.stack([self.grad(a) for a in A])


def _sym(H):
    H = np.atleast_2d(np.asarray(H, dtype=np.float64))
    if H.shape[0] != H.shape[1]:
        raise ConfigurationError("utility matrix must be square")
    return 0.5 * (H + H.T)


class QuadraticUtility(Utility):
    """W(a) = a' H a + h' a; H symmetrized on construction."""

    def __init__(self, H, h=None):
        self.H = _sym(H)
        self.dim = self.H.shape[0]
        self.h = (
            np.zeros(self.dim)
            if h is None
            else np.asarray(h, dtype=np.float64).reshape(self.dim)
        )

    def value(self, a):
        a = np.asarray(a, dtype=np.float64)
        return float(a @ self.H @ a + self.h @ a)

    def grad(self, a):
        a = np.asarray(a, dtype=np.float64)
        return 2.0 * self.H @ a + self.h

    def hess(self, a):
        return 2.0 * self.H

    def value_many(self, A):
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        return np.einsum("ni,ij,nj->n", A, self.H, A) + A @ self.h

    def grad_many(self, A):
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        return 2.0 * A @ self.H + self.h


class ProductAcceptanceUtility(Utility):
    """W(a) = a_1 * sum_i G_i(a_{i+1}); acceptance curves need G_i' > 0."""

    def __init__(self, curves):
        self.curves = list(curves)
        self.dim = len(self.curves) + 1

    def value(self, a):
        a = np.asarray(a, dtype=np.float64)
        return float(a[0] * sum(float(c(a[i + 1])) for i, c in enumerate(self.curves)))

    def grad(self, a):
        a = np.asarray(a, dtype=np.float64)
        g = np.empty(self.dim)
        g[0] = sum(float(c(a[i + 1])) for i, c in enumerate(self.curves))
        for i, c in enumerate(self.curves):
            g[i + 1] = a[0] * float(c.deriv1(a[i + 1]))
        return g

    def hess(self, a):
        a = np.asarray(a, dtype=np.float64)
        H = np.zeros((self.dim, self.dim))
        for i, c in enumerate(self.curves):
            d1 = float(c.deriv1(a[i + 1]))
            H[0, i + 1] = H[i + 1, 0] = d1
            H[i + 1, i + 1] = a[0] * float(c.deriv2(a[i + 1]))
        return H

    def value_many(self, A):
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        acc = np.zeros(A.shape[0])
        for i, c in enumerate(self.curves):
            acc += np.asarray(c(A[:, i + 1]))
        return A[:, 0] * acc

    def grad_many(self, A):
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        out = np.empty((A.shape[0], self.dim))
        acc = np.zeros(A.shape[0])
        for i, c in enumerate(self.curves):
            acc += np.asarray(c(A[:, i + 1]))
            out[:, i + 1] = A[:, 0] * np.asarray(c.deriv1(A[:, i + 1]))
        out[:, 0] = acc
        return out


class MultiProductUtility(Utility):
    """W(a) = sum_i a_i G_i(a_{i+N}) over N prospect pairs."""

    def __init__(self, curves):
        self.curves = list(curves)
        self.n_products = len(self.curves)
        self.dim = 2 * self.n_products

    def value(self, a):
        a = np.asarray(a, dtype=np.float64)
        n = self.n_products
        return float(
            sum(a[i] * float(c(a[i + n])) for i, c in enumerate(self.curves))
        )

    def grad(self, a):
        a = np.asarray(a, dtype=np.float64)
        n = self.n_products
        g = np.empty(self.dim)
        for i, c in enumerate(self.curves):
            g[i] = float(c(a[i + n]))
            g[i + n] = a[i] * float(c.deriv1(a[i + n]))
        return g

    def hess(self, a):
        a = np.asarray(a, dtype=np.float64)
        n = self.n_products
        H = np.zeros((self.dim, self.dim))
        for i, c in enumerate(self.curves):
            d1 = float(c.deriv1(a[i + n]))
            H[i, i + n] = H[i + n, i] = d1
            H[i + n, i + n] = a[i] * float(c.deriv2(a[i + n]))
        return H

    def value_many(self, A):
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        n = self.n_products
        out = np.zeros(A.shape[0])
        for i, c in enumerate(self.curves):
            out += A[:, i] * np.asarray(c(A[:, i + n]))
        return out

    def grad_many(self, A):
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        n = self.n_products
        out = np.empty((A.shape[0], self.dim))
        for i, c in enumerate(self.curves):
            out[:, i] = np.asarray(c(A[:, i + n]))
            out[:, i + n] = A[:, i] * np.asarray(c.deriv1(A[:, i + n]))
        return out


class RadialUtility(Utility):
    """W(a) = phi(a' H a) with H symmetric positive definite."""

    def __init__(self, H, phi: ScalarCurve):
        self.H = _sym(H)
        if np.linalg.eigvalsh(self.H).min() <= 0:
            raise ConfigurationError("radial utility requires positive definite H")
        self.phi = phi
        self.dim = self.H.shape[0]

    def _q(self, a):
        return float(a @ self.H @ a)

    def value(self, a):
        a = np.asarray(a, dtype=np.float64)
        return float(self.phi(self._q(a)))

    def grad(self, a):
        a = np.asarray(a, dtype=np.float64)
        return 2.0 * float(self.phi.deriv1(self._q(a))) * (self.H @ a)

    def hess(self, a):
        a = np.asarray(a, dtype=np.float64)
        q = self._q(a)
        Ha = self.H @ a
        return 4.0 * float(self.phi.deriv2(q)) * np.outer(Ha, Ha) + 2.0 * float(
            self.phi.deriv1(q)
        ) * self.H

    def value_many(self, A):
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        q = np.einsum("ni,ij,nj->n", A, self.H, A)
        return np.asarray(self.phi(q))

    def grad_many(self, A):
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        q = np.einsum("ni,ij,nj->n", A, self.H, A)
        return 2.0 * np.asarray(self.phi.deriv1(q))[:, None] * (A @ self.H)


class CustomUtility(Utility):
    """Black-box W(a); derivatives by central finite differences."""

    def __init__(self, fn, dim):
        self.fn = fn
        self.dim = dim

    def value(self, a):
        v = float(self.fn(np.asarray(a, dtype=np.float64)))
        if not math.isfinite(v):
            raise NumericDomainError("custom utility returned a non-finite value")
        return v


def eval_W(utility: Utility, a):
    """Value, gradient and symmetric Hessian of W at a."""
    a = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise PreconditionError("eval_W requires a finite action")
    v = utility.value(a)
    g = utility.grad(a)
    H = utility.hess(a)
    return v, g, 0.5 * (H + H.T)


# ---------------------------------------------------------------------------
# receivers


class MomentReceiver:
    """G(a, w) = a - g(w); the optimal action is the posterior mean of g."""

    kind = "moment"

    def __init__(self, moment_map: MomentMap):
        self.moment_map = moment_map
        self.epsilon = 1.0

    def evaluate(self, a, omegas):
        return a - self.moment_map(omegas)

    def jac_a(self, a, omega):
        return np.eye(self.moment_map.out_dim)

    def jac_omega(self, a, omega):
        return -self.moment_map.jacobian(omega)


class GeneralReceiver:
    """Black-box monotone G with declared modulus epsilon > 0.

    ``evaluator(a, omegas)`` must be vectorized over states: given a single
    action (M,) and states (n, L) it returns (n, M). Optional analytic
    Jacobians override the finite-difference defaults.
    """

    kind = "general"

    def __init__(self, evaluator, epsilon, dim, jac_a=None, jac_omega=None):
        if epsilon <= 0:
            raise ConfigurationError("monotonicity modulus epsilon must be positive")
        self.evaluator = evaluator
        self.epsilon = float(epsilon)
        self.dim = dim
        self._jac_a = jac_a
        self._jac_omega = jac_omega

    def evaluate(self, a, omegas):
        a = np.asarray(a, dtype=np.float64)
        out = np.atleast_2d(self.evaluator(a, np.atleast_2d(omegas)))
        if not np.all(np.isfinite(out)):
            raise NumericDomainError("receiver evaluator returned non-finite values")
        return out

    def jac_a(self, a, omega):
        if self._jac_a is not None:
            return np.atleast_2d(self._jac_a(a, omega))
        a = np.asarray(a, dtype=np.float64)
        omega = np.atleast_2d(omega)
        h = fd_step(a)
        cols = []
        for i in range(a.size):
            e = np.zeros_like(a)
            e[i] = h[i]
            cols.append(
                (self.evaluate(a + e, omega)[0] - self.evaluate(a - e, omega)[0])
                / (2 * h[i])
            )
        return np.stack(cols, axis=1)

    def jac_omega(self, a, omega):
        if self._jac_omega is not None:
            return np.atleast_2d(self._jac_omega(a, omega))
        omega = np.asarray(omega, dtype=np.float64)
        h = fd_step(omega)
        cols = []
        for i in range(omega.size):
            e = np.zeros_like(omega)
            e[i] = h[i]
            cols.append(
                (
                    self.evaluate(a, (omega + e)[None, :])[0]
                    - self.evaluate(a, (omega - e)[None, :])[0]
                )
                / (2 * h[i])
            )
        return np.stack(cols, axis=1)


def check_receiver_monotonicity(receiver, cloud, seed=0, trials=32):
    """Spot-check -z' D_a G z >= eps |z|^2 on sampled (a, w, z) triples.

    Returns the worst observed ratio; raises when it undercuts the declared
    modulus by more than 5 percent.
    """
    if receiver.kind == "moment":
        return 1.0
    rng = np.random.default_rng(seed)
    m = receiver.dim
    worst = np.inf
    for _ in range(trials):
        omega = cloud.points[rng.integers(cloud.n)]
        a = rng.normal(scale=2.0, size=m)
        z = rng.normal(size=m)
        z /= np.linalg.norm(z)
        J = receiver.jac_a(a, omega)
        worst = min(worst, float(-z @ J @ z))
    if worst < 0.95 * receiver.epsilon:
        raise ConfigurationError(
            f"declared epsilon {receiver.epsilon:g} not supported by samples "
            f"(worst modulus {worst:g})"
        )
    return worst


def full_info_action(receiver, omega, tol=1e-12):
    """The action solving G(a, w) = 0 at a single revealed state."""
    if receiver.kind == "moment":
        return eval_g(receiver.moment_map, omega)
    from .receiver import solve_action  # local import; receiver.py imports us

    cloud = ParticleCloud(np.atleast_2d(omega), np.array([1.0]), 0, "singleton")
    result = solve_action(receiver, cloud, tol=max(tol, 1e-12))
    if result.residual_norm > 1e-10:
        from .errors import SolverError

        raise SolverError(
            "full_info_action did not reach residual 1e-10",
            residual=result.residual_norm,
            payload=result,
        )
    return result.action


# ---------------------------------------------------------------------------
# problem spec


@dataclass
class ProblemSpec:
    """Full persuasion instance; immutable by convention after construction."""

    state_dim: int
    action_dim: int
    prior: object
    moment_map: MomentMap
    utility: Utility
    receiver: object = field(default=None)

    def __post_init__(self):
        if self.state_dim < 1 or self.action_dim < 1:
            raise ConfigurationError("state and action dimensions must be >= 1")
        if self.receiver is None:
            self.receiver = MomentReceiver(self.moment_map)
        if self.receiver.kind == "moment":
            if self.moment_map.out_dim != self.action_dim:
                raise ConfigurationError(
                    "moment map output dimension must equal the action dimension"
                )
        if getattr(self.utility, "dim", self.action_dim) != self.action_dim:
            raise ConfigurationError("utility dimension must equal action dimension")
        if getattr(self.prior, "dim", self.state_dim) != self.state_dim:
            raise ConfigurationError("prior dimension must equal state dimension")

    @property
    def is_moment(self):
        return self.receiver.kind == "moment"

    def g_values(self, cloud: ParticleCloud):
        return self.moment_map(cloud.points)
