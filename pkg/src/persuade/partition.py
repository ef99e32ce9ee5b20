"""K-signal partition optimization by alternating first-order conditions."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ._kernels import affine_argmax, segment_reduce
from .errors import PreconditionError, SolverError
from .model import ParticleCloud, ProblemSpec
from .receiver import solve_action
from .transport import multiplier

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 500


@dataclass
class PartitionState:
    """A K-signal solution; actions are receiver-optimal for their cells."""

    K: int
    labels: np.ndarray  # (n,) ints in [0, K)
    actions: np.ndarray  # (K, M)
    multipliers: np.ndarray  # (K, M) stacked x_k
    masses: np.ndarray  # (K,)
    value: float
    iterations: int = 0
    converged: bool = False
    restart_index: int = 0
    value_trace: np.ndarray = field(default_factory=lambda: np.empty(0))
    records: list = field(default_factory=list)  # MultiplierRecord per cell

    def nonempty(self):
        return self.masses > 0


# ---------------------------------------------------------------------------
# scoring


def _assignment_scores(problem, actions, xs):
    """Per-signal affine score data: score_k(w) = consts[k] + coef-part."""
    W_k = problem.utility.value_many(actions)
    consts = W_k - np.einsum("kd,kd->k", xs, actions)
    return consts


def assign_cells(problem: ProblemSpec, actions, xs, cloud: ParticleCloud):
    """Argmax_k of W(a_k, w) - x_k . G(a_k, w); ties to the smallest k."""
    actions = np.atleast_2d(np.asarray(actions, dtype=np.float64))
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    labels, _ = _assign_with_best(problem, actions, xs, cloud)
    return labels


def _assign_with_best(problem, actions, xs, cloud, gvals=None):
    if problem.is_moment:
        if gvals is None:
            gvals = problem.g_values(cloud)
        consts = _assignment_scores(problem, actions, xs)
        return affine_argmax(gvals, xs, consts)
    # general receivers: W(a_k) - x_k . G(a_k, w), vectorized per signal
    n = cloud.n
    k = actions.shape[0]
    scores = np.empty((n, k))
    W_k = problem.utility.value_many(actions)
    for j in range(k):
        G = problem.receiver.evaluate(actions[j], cloud.points)
        scores[:, j] = W_k[j] - G @ xs[j]
    labels = np.argmax(scores, axis=1)
    return labels, scores[np.arange(n), labels]


# ---------------------------------------------------------------------------
# cell solves


def _solve_cells(problem, cloud, labels, k, gvals=None):
    """Receiver-optimal action, multiplier and mass per cell."""
    if problem.is_moment:
        if gvals is None:
            gvals = problem.g_values(cloud)
        masses, sums = segment_reduce(labels, cloud.weights, gvals, k)
        actions = np.zeros((k, gvals.shape[1]))
        alive = masses > 0
        actions[alive] = sums[alive] / masses[alive, None]
        xs = problem.utility.grad_many(actions)
        return actions, xs, masses, None
    actions = np.zeros((k, problem.action_dim))
    xs = np.zeros_like(actions)
    masses = np.zeros(k)
    records = []
    for j in range(k):
        mask = labels == j
        masses[j] = cloud.weights[mask].sum()
        if masses[j] <= 0:
            records.append(None)
            continue
        cell = cloud.subcloud(mask)
        actions[j] = solve_action(problem.receiver, cell, tol=1e-10).action
        rec = multiplier(problem, cell, actions[j])
        xs[j] = rec.multiplier
        records.append(rec)
    return actions, xs, masses, records


def _consistent_value(problem, actions, masses):
    alive = masses > 0
    return float(masses[alive] @ problem.utility.value_many(actions[alive]))


# ---------------------------------------------------------------------------
# Lloyd sweeps


def lloyd_iterate(problem: ProblemSpec, cloud: ParticleCloud, state: PartitionState):
    """One sweep: per-cell action solve, multipliers, reassignment.

    The returned state is internally consistent (actions re-solved for the
    new labels, value evaluated on them); empty cells are reseeded at the
    particle with the largest transport cost.
    """
    gvals = problem.g_values(cloud) if problem.is_moment else None
    w_star = _full_info_values(problem, cloud, gvals)
    labels, actions, xs, masses, records, _ = _sweep(
        problem, cloud, state.labels, state.K, gvals, w_star
    )
    value = _consistent_value(problem, actions, masses)
    return PartitionState(
        K=state.K,
        labels=labels,
        actions=actions,
        multipliers=xs,
        masses=masses,
        value=value,
        iterations=state.iterations + 1,
        converged=bool(np.array_equal(labels, state.labels)),
        restart_index=state.restart_index,
        records=records or [],
    )


def _full_info_values(problem, cloud, gvals):
    if problem.is_moment:
        return problem.utility.value_many(gvals)
    from .model import full_info_action

    return problem.utility.value_many(
        np.stack([full_info_action(problem.receiver, om) for om in cloud.points])
    )


def _sweep(problem, cloud, labels, k, gvals, w_star):
    actions, xs, masses, records = _solve_cells(problem, cloud, labels, k, gvals)
    # reseed dead cells before reassigning: worst transport cost first
    dead = np.flatnonzero(masses <= 0)
    if dead.size:
        _, best = _assign_with_best(problem, actions, xs, cloud, gvals)
        order = np.argsort(w_star - best)[::-1]
        for j, pidx in zip(dead, order[: dead.size]):
            if problem.is_moment:
                actions[j] = gvals[pidx]
            else:
                from .model import full_info_action

                actions[j] = full_info_action(problem.receiver, cloud.points[pidx])
            xs[j] = problem.utility.grad(actions[j])
    new_labels, best = _assign_with_best(problem, actions, xs, cloud, gvals)
    new_actions, new_xs, new_masses, new_records = _solve_cells(
        problem, cloud, new_labels, k, gvals
    )
    return new_labels, new_actions, new_xs, new_masses, new_records, best


# ---------------------------------------------------------------------------
# multistart driver


def optimize_partition(
    problem: ProblemSpec,
    cloud: ParticleCloud,
    K: int,
    restarts: int = 8,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = 0,
):
    """Best K-signal partition across seeded restarts.

    Restart r seeds its actions at the full-information actions of K
    distinct particles chosen by a farthest-point pass started from a
    seeded draw. Within a restart the reported value trace is monotone
    nondecreasing: a sweep that would lower the value ends the restart at
    the best state seen (indefinite utilities admit rare non-improving
    sweeps; see the concave shortcut below for the fully concave case).
    """
    if K < 1 or restarts < 1:
        raise PreconditionError("optimize_partition needs K >= 1 and restarts >= 1")
    gvals = problem.g_values(cloud) if problem.is_moment else None
    ref = gvals if gvals is not None else cloud.points
    n_distinct = np.unique(ref, axis=0).shape[0]
    if K > n_distinct:
        warnings.warn(
            f"K={K} exceeds the {n_distinct} distinct particles; clamping",
            stacklevel=2,
        )
        K = n_distinct

    if K == 1 or _utility_is_concave(problem, cloud, gvals):
        return _single_cell_state(problem, cloud, K, gvals)

    w_star = _full_info_values(problem, cloud, gvals)
    rng = np.random.default_rng(seed)
    best_state = None
    any_converged = False
    for r in range(restarts):
        state = _run_restart(
            problem, cloud, K, r, rng, tol, max_iter, gvals, w_star
        )
        any_converged = any_converged or state.converged
        if best_state is None or state.value > best_state.value:
            best_state = state
    if not any_converged:
        raise SolverError(
            "no restart converged", residual=None, payload=best_state
        )
    return best_state


def _run_restart(problem, cloud, K, r, rng, tol, max_iter, gvals, w_star):
    ref = gvals if gvals is not None else cloud.points
    seeds = _farthest_point_seeds(ref, K, rng)
    if problem.is_moment:
        actions = gvals[seeds].copy()
    else:
        from .model import full_info_action

        actions = np.stack(
            [full_info_action(problem.receiver, cloud.points[i]) for i in seeds]
        )
    xs = problem.utility.grad_many(actions)
    labels, _ = _assign_with_best(problem, actions, xs, cloud, gvals)

    best = None
    trace = []
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        new_labels, actions, xs, masses, records, _ = _sweep(
            problem, cloud, labels, K, gvals, w_star
        )
        value = _consistent_value(problem, actions, masses)
        state = PartitionState(
            K=K,
            labels=new_labels,
            actions=actions,
            multipliers=xs,
            masses=masses,
            value=value,
            iterations=it,
            converged=False,
            restart_index=r,
            records=records or [],
        )
        if best is not None and value < best.value - 1e-15 * max(1.0, abs(best.value)):
            # non-improving sweep: stop at the best state seen
            best.converged = True
            converged = True
            break
        trace.append(value)
        if best is None or value >= best.value:
            best = state
        if np.array_equal(new_labels, labels):
            best.converged = True
            converged = True
            break
        if len(trace) >= 2:
            gain = trace[-1] - trace[-2]
            if gain <= tol * max(1.0, abs(trace[-1])):
                best.converged = True
                converged = True
                break
        labels = new_labels
    best.converged = converged
    best.value_trace = np.asarray(trace)
    best.iterations = it
    return best


def _farthest_point_seeds(points, k, rng):
    n = points.shape[0]
    first = int(rng.integers(n))
    chosen = [first]
    d = np.linalg.norm(points - points[first], axis=1)
    for _ in range(k - 1):
        idx = int(np.argmax(d))
        if d[idx] <= 0:
            # duplicates exhausted: fill with fresh random distinct indices
            pool = np.setdiff1d(np.arange(n), np.array(chosen))
            idx = int(rng.choice(pool))
        chosen.append(idx)
        d = np.minimum(d, np.linalg.norm(points - points[idx], axis=1))
    return np.array(chosen)


def _utility_is_concave(problem, cloud, gvals, samples=100, seed=1234):
    """True when the Hessian is negative semi-definite at sampled actions.

    Pooling everything is then optimal (no-revelation regime) and the
    reassignment iteration need not run at all.
    """
    rng = np.random.default_rng(seed)
    ref = gvals if gvals is not None else cloud.points
    idx = rng.integers(ref.shape[0], size=min(samples, ref.shape[0]))
    pts = np.vstack([ref[idx], cloud.weights @ ref])
    scale = max(1.0, float(np.abs(pts).max()))
    for a in pts[:, : problem.action_dim]:
        h = problem.utility.hess(a)
        if np.linalg.eigvalsh(0.5 * (h + h.T)).max() > 1e-10 * scale:
            return False
    return True


def _single_cell_state(problem, cloud, K, gvals):
    n = cloud.n
    labels = np.zeros(n, dtype=np.int64)
    actions, xs, masses, records = _solve_cells(problem, cloud, labels, K, gvals)
    value = _consistent_value(problem, actions, masses)
    return PartitionState(
        K=K,
        labels=labels,
        actions=actions,
        multipliers=xs,
        masses=masses,
        value=value,
        iterations=1,
        converged=True,
        restart_index=0,
        value_trace=np.array([value]),
        records=records or [],
    )


# ---------------------------------------------------------------------------
# policy values


def policy_value(problem: ProblemSpec, cloud: ParticleCloud, policy):
    """Sender's expected utility of a policy.

    ``policy`` is either an integer label array (cell actions are re-solved
    so receiver optimality holds), a per-particle action array (n, M), or a
    vectorized callable mapping states (n, L) to actions (n, M).
    """
    if callable(policy):
        actions = np.atleast_2d(policy(cloud.points))
        return float(cloud.weights @ problem.utility.value_many(actions))
    policy = np.asarray(policy)
    if policy.ndim == 1 and np.issubdtype(policy.dtype, np.integer):
        k = int(policy.max()) + 1
        actions, _, masses, _ = _solve_cells(problem, cloud, policy, k)
        return _consistent_value(problem, actions, masses)
    actions = np.atleast_2d(policy.astype(np.float64))
    if actions.shape[0] != cloud.n:
        raise PreconditionError("per-particle actions must match the cloud size")
    return float(cloud.weights @ problem.utility.value_many(actions))
