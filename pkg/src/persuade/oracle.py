"""Ground-truth solvers for desk-scale instances.

Exhaustive partition enumeration over canonical label assignments and the
1-D convex-majorant dual, solved by a dense-tableau simplex written here
(instances are tiny; Bland's rule keeps it cycle-free and deterministic).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, SolverError
from .model import ParticleCloud, ProblemSpec
from .receiver import solve_action

ENUM_CAP = 1_000_000
MAJORANT_CAP = 500


@dataclass(frozen=True)
class OracleResult:
    best_value: float
    best_labels: np.ndarray | None
    enumerated_count: int
    method: str


# ---------------------------------------------------------------------------
# exhaustive enumeration


def canonical_assignments(n: int, k: int):
    """All label vectors in first-occurrence canonical order.

    Relabeling-symmetric assignments appear exactly once: label[0] = 0 and
    label[i] <= max(label[:i]) + 1. Assignments using fewer than k labels
    are produced once, covering every empty-cell configuration.
    """
    out = []
    labels = np.zeros(n, dtype=np.int64)

    def rec(i, top):
        if i == n:
            out.append(labels.copy())
            return
        for v in range(min(top + 1, k - 1) + 1):
            labels[i] = v
            rec(i + 1, max(top, v))

    rec(1, 0)
    return np.array(out)


def enumerate_partitions(
    problem: ProblemSpec, cloud: ParticleCloud, K: int
) -> OracleResult:
    """Exact best K-signal partition value by exhaustive search."""
    n = cloud.n
    if K < 1:
        raise PreconditionError("enumerate_partitions needs K >= 1")
    if K**n > ENUM_CAP:
        raise PreconditionError(
            f"assignment space {K}^{n} = {K**n} exceeds the cap {ENUM_CAP}"
        )
    assignments = canonical_assignments(n, K)
    if problem.is_moment:
        best_value, best_idx = _moment_batch_values(problem, cloud, assignments, K)
    else:
        best_value, best_idx = _general_values(problem, cloud, assignments, K)
    return OracleResult(
        best_value, assignments[best_idx], assignments.shape[0], "exhaustive"
    )


def _moment_batch_values(problem, cloud, assignments, k, chunk=4096):
    g = problem.g_values(cloud)
    w = cloud.weights
    m = g.shape[1]
    best = -np.inf
    best_idx = 0
    for lo in range(0, assignments.shape[0], chunk):
        batch = assignments[lo : lo + chunk]
        onehot = batch[:, :, None] == np.arange(k)[None, None, :]
        masses = np.einsum("bnk,n->bk", onehot, w)
        sums = np.einsum("bnk,nd->bkd", onehot, w[:, None] * g)
        with np.errstate(invalid="ignore", divide="ignore"):
            means = sums / masses[:, :, None]
        flat = means.reshape(-1, m)
        ok = masses.reshape(-1) > 0
        vals = np.zeros(flat.shape[0])
        vals[ok] = problem.utility.value_many(flat[ok])
        totals = (vals.reshape(masses.shape) * masses).sum(axis=1)
        idx = int(np.argmax(totals))
        if totals[idx] > best:
            best = float(totals[idx])
            best_idx = lo + idx
    return best, best_idx


def _general_values(problem, cloud, assignments, k):
    best = -np.inf
    best_idx = 0
    for bi, labels in enumerate(assignments):
        total = 0.0
        for j in range(k):
            mask = labels == j
            if not mask.any():
                continue
            cell = cloud.subcloud(mask)
            a = solve_action(problem.receiver, cell, tol=1e-10).action
            total += cloud.weights[mask].sum() * problem.utility.value(a)
        if total > best:
            best = total
            best_idx = bi
    return best, best_idx


# ---------------------------------------------------------------------------
# dense tableau simplex (Bland's rule)


def _simplex_standard(c, A, b, tol=1e-11, max_pivots=200_000):
    """min c.x s.t. A x = b, x >= 0; two-phase dense tableau."""
    A = np.asarray(A, dtype=np.float64).copy()
    b = np.asarray(b, dtype=np.float64).copy()
    c = np.asarray(c, dtype=np.float64).copy()
    m, n = A.shape
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    # phase 1: artificial basis
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, n : n + m] = 1.0
    basis = list(range(n, n + m))
    for i in range(m):
        T[m] -= T[i]
    _pivot_until_optimal(T, basis, n + m, tol, max_pivots)
    if T[m, -1] < -1e-8:
        raise SolverError("phase-1 simplex failed to find a feasible point")
    # drive remaining artificials out of the basis where possible
    for i, bi in enumerate(basis):
        if bi >= n:
            row = T[i, :n]
            j = np.flatnonzero(np.abs(row) > tol)
            if j.size:
                _pivot(T, i, int(j[0]))
                basis[i] = int(j[0])

    # phase 2
    keep = [i for i, bi in enumerate(basis) if bi < n]
    rows = T[keep, : n + 1 + m]
    T2 = np.zeros((len(keep) + 1, n + 1))
    T2[:-1, :n] = rows[:, :n]
    T2[:-1, -1] = rows[:, -1]
    basis2 = [basis[i] for i in keep]
    T2[-1, :n] = c
    for i, bi in enumerate(basis2):
        T2[-1] -= T2[-1, bi] * T2[i]
    _pivot_until_optimal(T2, basis2, n, tol, max_pivots)
    x = np.zeros(n)
    for i, bi in enumerate(basis2):
        x[bi] = T2[i, -1]
    return x, float(-T2[-1, -1])


def _pivot_until_optimal(T, basis, n_cols, tol, max_pivots):
    for _ in range(max_pivots):
        # Bland: entering variable = smallest index with negative reduced cost
        enter = -1
        for j in range(n_cols):
            if T[-1, j] < -tol:
                enter = j
                break
        if enter < 0:
            return
        col = T[:-1, enter]
        rows = np.flatnonzero(col > tol)
        if rows.size == 0:
            raise SolverError("simplex detected an unbounded direction")
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        cand = rows[ratios <= best + tol]
        leave = min(cand, key=lambda r: basis[r])  # Bland tie-break
        _pivot(T, int(leave), enter)
        basis[int(leave)] = enter
    raise SolverError("simplex exceeded the pivot limit")


def _pivot(T, row, col):
    T[row] /= T[row, col]
    for i in range(T.shape[0]):
        if i != row and T[i, col] != 0.0:
            T[i] -= T[i, col] * T[row]


# ---------------------------------------------------------------------------
# 1-D convex majorant


def convex_majorant_value_1d(x, weights, w_values) -> float:
    """Value of the cheapest convex majorant of W on a 1-D grid.

    Solves min sum_i w_i p_i subject to p_i >= W_i and nondecreasing
    slopes; equals the unlimited-signal persuasion value for 1-D moment
    problems. Substituting q = p - W >= 0 keeps the tableau in standard
    form with only the n - 2 convexity rows.
    """
    x = np.asarray(x, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    w_values = np.asarray(w_values, dtype=np.float64)
    n = x.size
    if n > MAJORANT_CAP:
        raise PreconditionError(f"majorant grid capped at {MAJORANT_CAP} points")
    if not np.all(np.diff(x) > 0):
        raise PreconditionError("majorant grid must strictly increase")
    if n <= 2:
        return float(weights @ w_values)

    dx = np.diff(x)
    n_con = n - 2
    # B q >= d rows: q_i/dx_i - q_{i+1}(1/dx_i + 1/dx_{i+1}) + q_{i+2}/dx_{i+1}
    B = np.zeros((n_con, n))
    d = np.empty(n_con)
    for i in range(n_con):
        B[i, i] = 1.0 / dx[i]
        B[i, i + 1] = -(1.0 / dx[i] + 1.0 / dx[i + 1])
        B[i, i + 2] = 1.0 / dx[i + 1]
        d[i] = -(
            (w_values[i + 2] - w_values[i + 1]) / dx[i + 1]
            - (w_values[i + 1] - w_values[i]) / dx[i]
        )
    # standard form with surplus variables
    A = np.hstack([B, -np.eye(n_con)])
    c = np.concatenate([weights, np.zeros(n_con)])
    _, opt = _simplex_standard(c, A, d)
    return float(opt + weights @ w_values)
