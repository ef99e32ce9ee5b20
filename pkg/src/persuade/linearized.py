"""Small-uncertainty limit: steady state, information relevance, limit cells."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from ._kernels import affine_argmax, segment_reduce
from .errors import DegenerateCellError, PreconditionError
from .model import ParticleCloud, ProblemSpec, full_info_action
from .partition import PartitionState

DET_FLOOR = 1e-10


@dataclass(frozen=True)
class InfoRelevance:
    """Curvature data of the problem at the zero-uncertainty steady state."""

    steady_action: np.ndarray  # a0, (M,)
    Dmat: np.ndarray  # (L, L) symmetric information relevance matrix
    Gmat: np.ndarray  # (M, L) action response to first-moment beliefs
    raw_asymmetry: float = 0.0
    degenerate: bool = False


def steady_state(problem: ProblemSpec):
    """Action solving G(a, 0) = 0."""
    zero = np.zeros(problem.state_dim)
    return full_info_action(problem.receiver, zero)


def info_relevance(problem: ProblemSpec, step: float = 1e-3) -> InfoRelevance:
    """Information relevance matrix and belief response at the steady state.

    The relevance matrix is the state Hessian of the indirect utility
    W(a_*(w)) at w = 0 (sender utilities here carry no direct state
    dependence, so the partial state Hessian term vanishes). Second
    derivatives run through the inner action solver, so the stencil is
    Richardson-extrapolated over two step sizes.
    """
    a0 = steady_state(problem)
    zero = np.zeros(problem.state_dim)

    jac_a = problem.receiver.jac_a(a0, zero)
    if abs(np.linalg.det(jac_a)) < 1e-14 or np.linalg.cond(jac_a) > 1e12:
        raise DegenerateCellError("D_a G is singular at the steady state")
    jac_w = problem.receiver.jac_omega(a0, zero)
    gmat = np.linalg.solve(jac_a, jac_w)

    def indirect(w):
        return problem.utility.value(full_info_action(problem.receiver, w))

    coarse = _fd_hessian(indirect, zero, step)
    fine = _fd_hessian(indirect, zero, step / 2.0)
    raw = (4.0 * fine - coarse) / 3.0
    dmat = 0.5 * (raw + raw.T)
    asym = float(np.abs(raw - dmat).max())

    degenerate = abs(np.linalg.det(dmat)) < DET_FLOOR
    if degenerate:
        warnings.warn(
            "information relevance matrix is near-singular", stacklevel=2
        )
    return InfoRelevance(a0, dmat, gmat, asym, degenerate)


def _fd_hessian(f, x, h):
    n = x.size
    out = np.empty((n, n))
    f0 = f(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h
        out[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / h**2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h
            v = (
                f(x + ei + ej)
                - f(x + ei - ej)
                - f(x - ei + ej)
                + f(x - ei - ej)
            ) / (4.0 * h * h)
            out[i, j] = v
            out[j, i] = v
    return out


def first_order_action(ir: InfoRelevance, m1, eps: float):
    """a0 - eps * Gmat @ m1, the leading-order cell action."""
    return ir.steady_action - eps * ir.Gmat @ np.asarray(m1, dtype=np.float64)


# ---------------------------------------------------------------------------
# limiting quadratic partition


def _limit_scores(dmat, centers):
    coefs = centers @ dmat  # rows M1(k)' D
    consts = -0.5 * np.einsum("kd,kd->k", coefs, centers)
    return coefs, consts


def _surrogate(dmat, centers, masses):
    alive = masses > 0
    vals = np.einsum("kd,de,ke->k", centers[alive], dmat, centers[alive])
    return float(masses[alive] @ vals)


def solve_limit_partition(
    ir: InfoRelevance,
    cloud: ParticleCloud,
    K: int,
    restarts: int = 8,
    tol: float = 1e-9,
    max_iter: int = 200,
    seed: int = 0,
) -> PartitionState:
    """Fixed point of the limiting quadratic assignment.

    Cells are intersections of half-spaces by construction: a state joins
    argmax_k of M1(k)' D w - 0.5 M1(k)' D M1(k), then M1(k) is reset to the
    cell mean. A negative semi-definite D collapses to a single cell (the
    no-revelation regime); an indefinite D may cycle, in which case the best
    surrogate state seen is returned flagged non-converged. The returned
    ``actions`` hold the cell means M1(k) in state space and ``value`` holds
    the surrogate objective sum_k P_k M1(k)' D M1(k).
    """
    if K < 1:
        raise PreconditionError("solve_limit_partition needs K >= 1")
    dmat = 0.5 * (ir.Dmat + ir.Dmat.T)
    pts = cloud.points
    n = cloud.n
    K = min(K, np.unique(pts, axis=0).shape[0])

    if K == 1 or np.linalg.eigvalsh(dmat).max() <= 1e-12 * max(
        1.0, float(np.abs(dmat).max())
    ):
        labels = np.zeros(n, dtype=np.int64)
        centers = np.tile(cloud.mean(), (K, 1))
        masses = np.zeros(K)
        masses[0] = 1.0
        return PartitionState(
            K=K,
            labels=labels,
            actions=centers,
            multipliers=centers @ dmat,
            masses=masses,
            value=_surrogate(dmat, centers, masses),
            iterations=1,
            converged=True,
        )

    rng = np.random.default_rng(seed)
    best = None
    for r in range(restarts):
        state = _limit_restart(dmat, cloud, K, r, rng, tol, max_iter)
        if best is None or state.value > best.value or (
            state.value == best.value and state.converged and not best.converged
        ):
            best = state
    return best


def _limit_restart(dmat, cloud, K, r, rng, tol, max_iter):
    pts = cloud.points
    w = cloud.weights
    from .partition import _farthest_point_seeds

    centers = pts[_farthest_point_seeds(pts, K, rng)].copy()
    best_val = -np.inf
    best_centers = centers.copy()
    converged = False
    prev_labels = None
    it = 0
    while it < max_iter:
        it += 1
        coefs, consts = _limit_scores(dmat, centers)
        labels, best_score = affine_argmax(pts, coefs, consts)
        masses, sums = segment_reduce(labels, w, pts, K)
        dead = np.flatnonzero(masses <= 0)
        if dead.size:
            order = np.argsort(best_score)  # most under-served states first
            for j, pidx in zip(dead, order[: dead.size]):
                centers[j] = pts[pidx]
                sums[j] = pts[pidx] * w[pidx]
                masses[j] = 0.0
            coefs, consts = _limit_scores(dmat, centers)
            labels, _ = affine_argmax(pts, coefs, consts)
            masses, sums = segment_reduce(labels, w, pts, K)
        alive = masses > 0
        new_centers = centers.copy()
        new_centers[alive] = sums[alive] / masses[alive, None]
        val = _surrogate(dmat, new_centers, masses)
        if val > best_val:
            best_val = val
            best_centers = new_centers.copy()
        if prev_labels is not None and np.array_equal(labels, prev_labels):
            converged = True
            best_val = val
            best_centers = new_centers
            break
        move = float(np.max(np.linalg.norm(new_centers - centers, axis=1)))
        if move <= tol:
            converged = True
            best_val = val
            best_centers = new_centers
            break
        prev_labels = labels
        centers = new_centers

    # final assignment against the reported centers: labels then satisfy the
    # pairwise half-space inequalities exactly
    coefs, consts = _limit_scores(dmat, best_centers)
    labels, _ = affine_argmax(pts, coefs, consts)
    masses, _ = segment_reduce(labels, w, pts, K)
    return PartitionState(
        K=K,
        labels=labels,
        actions=best_centers,
        multipliers=coefs,
        masses=masses,
        value=_surrogate(dmat, best_centers, masses),
        iterations=it,
        converged=converged,
        restart_index=r,
    )


def check_halfspace_membership(ir: InfoRelevance, state: PartitionState, cloud):
    """Exact pairwise linear-inequality membership of the returned cells."""
    dmat = 0.5 * (ir.Dmat + ir.Dmat.T)
    coefs, consts = _limit_scores(dmat, state.actions)
    labels, _ = affine_argmax(cloud.points, coefs, consts)
    return bool(np.array_equal(labels, state.labels))


def best_label_overlap(labels_a, labels_b, k, weights=None):
    """Largest weighted agreement between two labelings over relabelings."""
    labels_a = np.asarray(labels_a)
    labels_b = np.asarray(labels_b)
    if weights is None:
        weights = np.full(labels_a.size, 1.0 / labels_a.size)
    conf = np.zeros((k, k))
    for a, b, w in zip(labels_a, labels_b, weights):
        conf[a, b] += w
    best = 0.0
    for perm in itertools.permutations(range(k)):
        best = max(best, sum(conf[i, perm[i]] for i in range(k)))
    return best
