"""Receivers' optimal action for a posterior carried as a particle cloud."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, SolverError
from .model import ParticleCloud, full_info_action

MAX_ITERATIONS = 10_000
DAMPING_FLOOR = 1e-6


@dataclass(frozen=True)
class ActionSolveResult:
    action: np.ndarray
    residual_norm: float
    iterations: int
    damping: float
    converged: bool = True


def solve_action(receiver, posterior: ParticleCloud, tol: float = 1e-10):
    """Solve E_posterior[G(a, w)] = 0.

    Moment receivers return the weighted mean of g in one step (exact).
    General receivers run the damped iteration a <- a + delta * E[G(a, w)],
    with delta initialized at the declared monotonicity modulus and halved
    whenever the residual grows; this mirrors the contraction argument while
    staying robust to a conservative modulus.
    """
    if posterior.n < 1:
        raise PreconditionError("solve_action needs a nonempty posterior")
    if tol <= 0:
        raise PreconditionError("solve_action needs tol > 0")

    if receiver.kind == "moment":
        gbar = posterior.weights @ receiver.moment_map(posterior.points)
        return ActionSolveResult(gbar, 0.0, 1, 1.0)

    # warm start: posterior-weighted mean of full-information actions
    fia = np.stack([full_info_action(receiver, w) for w in posterior.points])
    a = posterior.weights @ fia
    return _damped_solve(receiver, posterior, a, tol)


def _damped_solve(receiver, posterior, a0, tol):
    a = np.asarray(a0, dtype=np.float64).copy()
    delta = receiver.epsilon
    resid = _residual(receiver, posterior, a)
    rnorm = np.linalg.norm(resid)
    it = 0
    while rnorm > tol:
        if it >= MAX_ITERATIONS:
            raise SolverError(
                f"action solve exceeded {MAX_ITERATIONS} iterations",
                residual=rnorm,
                payload=ActionSolveResult(a, rnorm, it, delta, converged=False),
            )
        cand = a + delta * resid
        cand_resid = _residual(receiver, posterior, cand)
        cand_norm = np.linalg.norm(cand_resid)
        if cand_norm >= rnorm and delta > DAMPING_FLOOR:
            delta = max(0.5 * delta, DAMPING_FLOOR)
            it += 1
            continue
        a = cand
        resid = cand_resid
        rnorm = cand_norm
        it += 1
    return ActionSolveResult(a, float(rnorm), it, delta)


def _residual(receiver, posterior, a):
    return posterior.weights @ receiver.evaluate(a, posterior.points)


def lemma_bound_kappa(epsilon: float) -> float:
    """Instance constant for |a|^2 <= kappa E[|a_*(w)|^2].

    From the contraction estimates: sqrt(E|a - a_*|^2) <= eps^-2 sqrt(E|a_*|^2),
    hence |a| <= (1 + eps^-2) sqrt(E|a_*|^2).
    """
    return (1.0 + epsilon**-2) ** 2
