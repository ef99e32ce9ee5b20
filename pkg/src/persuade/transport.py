"""Information transport cost, multipliers and Bregman projection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import affine_argmin
from .errors import ConfigurationError, DegenerateCellError
from .model import ParticleCloud, ProblemSpec, Utility, full_info_action

COND_LIMIT = 1e12


@dataclass(frozen=True)
class MultiplierRecord:
    """Lagrange multiplier data for one signal cell."""

    action: np.ndarray
    multiplier: np.ndarray
    bar_grad_w: np.ndarray
    bar_jac_g: np.ndarray

    def linear_residual(self) -> float:
        return float(
            np.linalg.norm(self.multiplier @ self.bar_jac_g - self.bar_grad_w)
        )


def bregman_divergence(utility: Utility, a, b) -> float:
    """c(a, b) = W(b) - W(a) + grad W(a) . (a - b); zero at b = a."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(utility.value(b) - utility.value(a) + utility.grad(a) @ (a - b))


def bregman_divergence_many(utility: Utility, a, B) -> np.ndarray:
    """c(a, b) over rows of B for a fixed a."""
    a = np.asarray(a, dtype=np.float64)
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    g = utility.grad(a)
    return utility.value_many(B) - utility.value(a) + (a - B) @ g


def transport_cost(problem: ProblemSpec, a, x, omega) -> float:
    """c(a, w; x) = W(a_*(w)) - W(a) + x . G(a, w).

    For moment receivers with x = grad W(a) this equals the Bregman
    divergence from a to g(w).
    """
    a = np.asarray(a, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    a_star = full_info_action(problem.receiver, omega)
    G = problem.receiver.evaluate(a, np.atleast_2d(omega))[0]
    return float(
        problem.utility.value(a_star) - problem.utility.value(a) + x @ G
    )


def transport_cost_many(problem, a, x, omegas, w_star=None):
    """Vectorized transport cost of one (a, x) against many states."""
    omegas = np.atleast_2d(omegas)
    if w_star is None:
        if problem.is_moment:
            w_star = problem.utility.value_many(problem.moment_map(omegas))
        else:
            w_star = problem.utility.value_many(
                np.stack([full_info_action(problem.receiver, om) for om in omegas])
            )
    G = problem.receiver.evaluate(np.asarray(a, dtype=np.float64), omegas)
    return w_star - problem.utility.value(a) + G @ np.asarray(x, dtype=np.float64)


def multiplier(problem: ProblemSpec, cell: ParticleCloud, a) -> MultiplierRecord:
    """Cell multiplier x solving x' DbarG = DbarW with cell-weighted averages."""
    a = np.asarray(a, dtype=np.float64)
    grad_w = problem.utility.grad(a)
    if problem.is_moment:
        eye = np.eye(problem.action_dim)
        return MultiplierRecord(a, grad_w.copy(), grad_w, eye)
    jacs = np.stack(
        [problem.receiver.jac_a(a, om) for om in cell.points]
    )
    bar_jac = np.einsum("i,ijk->jk", cell.weights / cell.weights.sum(), jacs)
    cond = np.linalg.cond(bar_jac)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise DegenerateCellError(
            f"cell-averaged Jacobian is degenerate (cond {cond:.3g})"
        )
    x = np.linalg.solve(bar_jac.T, grad_w)
    return MultiplierRecord(a, x, grad_w, bar_jac)


# ---------------------------------------------------------------------------
# Bregman projection onto a candidate manifold


def manifold_affine_scores(utility: Utility, points):
    """Per-candidate (coefs, consts) so that c(a_j, b) = W(b) + coefs_j.b + consts_j."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    grads = utility.grad_many(points)
    consts = -utility.value_many(points) + np.einsum("jd,jd->j", grads, points)
    return -grads, consts


def bregman_project(utility: Utility, manifold, b):
    """Projection of one target point; returns (point, cost).

    Global scan over the manifold discretization, then one local refinement
    pass in manifold parameters when the manifold supports it. Exact closed
    forms (hyperplane with quadratic W, sphere with radial W) shortcut the
    scan. Ties resolve to the smallest discretization index.
    """
    pts, costs = bregman_project_many(utility, manifold, np.atleast_2d(b))
    return pts[0], float(costs[0])


def bregman_project_many(utility: Utility, manifold, B):
    """Vectorized projection; returns (points (n, M), costs (n,))."""
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    closed = getattr(manifold, "closed_form_project", None)
    if closed is not None:
        out = closed(utility, B)
        if out is not None:
            return out

    nodes = manifold.discretize()
    if nodes.shape[0] == 0:
        raise ConfigurationError("manifold discretization is empty")
    coefs, consts = manifold_affine_scores(utility, nodes)
    idx, part = affine_argmin(B, coefs, consts)
    costs = utility.value_many(B) + part

    refine = getattr(manifold, "refine_project", None)
    if refine is not None:
        pts = nodes[idx].copy()
        for i in range(B.shape[0]):
            cand = refine(utility, B[i], int(idx[i]))
            if cand is not None:
                cand_cost = bregman_divergence(utility, cand, B[i])
                if cand_cost < costs[i]:
                    pts[i] = cand
                    costs[i] = cand_cost
        return pts, costs
    return nodes[idx].copy(), costs


def min_cost_to_set(utility: Utility, manifold, B):
    """phi_Xi(b) = min over the manifold of c(a, b), vectorized over rows of B.

    Uses the manifold's exact minimum when available (sphere, hyperplane),
    otherwise the discretization scan.
    """
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    exact = getattr(manifold, "exact_min_cost", None)
    if exact is not None:
        out = exact(utility, B)
        if out is not None:
            return out
    _, costs = bregman_project_many(utility, manifold, B)
    return costs
