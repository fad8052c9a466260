"""Levenberg-Marquardt least squares with lower bounds by projection.

Minimizes ``||r(p)||^2`` (no 1/2 factor).  The damping term is
``lam * diag(J^T J)``; ``lam`` starts at ``lam0`` and is multiplied by ``nu``
on a rejected trial step and divided by ``nu`` on an accepted one.  Each
trial point is projected onto the box ``p >= lower``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidProblemError, NumericalError

GTOL = "gtol"
XTOL = "xtol"
FTOL = "ftol"
MAX_ITER = "max_iter"

# Called as hook(iteration, cost) for the initial point (iteration 0) and after
# every accepted step.  Used by the test-suite to watch for cost increases.
iteration_hooks: list[Callable[[int, float], None]] = []


@dataclass
class LeastSquaresProblem:
    residual: Callable[[np.ndarray], np.ndarray]
    p0: np.ndarray
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    lower: Optional[np.ndarray] = None
    max_iter: int = 200
    gtol: float = 1e-10
    xtol: float = 1e-10
    ftol: float = 1e-10
    lam0: float = 1e-3
    nu: float = 10.0


@dataclass
class SolveResult:
    p: np.ndarray
    cost: float
    iterations: int
    reason: str
    cost_history: list[float] = field(default_factory=list)
    n_evaluations: int = 0


def numeric_jacobian(residual, p, scale=1e-6):
    """Central-difference Jacobian with per-parameter step ``scale * max(|p_j|, 1)``."""
    p = np.asarray(p, dtype=float)
    columns = []
    for j in range(p.size):
        h = scale * max(abs(p[j]), 1.0)
        up = p.copy()
        down = p.copy()
        up[j] += h
        down[j] -= h
        r_up = np.atleast_1d(np.asarray(residual(up), dtype=float))
        r_down = np.atleast_1d(np.asarray(residual(down), dtype=float))
        if not (np.all(np.isfinite(r_up)) and np.all(np.isfinite(r_down))):
            raise NumericalError(f"non-finite residual within the stencil of parameter {j}")
        columns.append((r_up - r_down) / (up[j] - down[j]))
    return np.column_stack(columns)


def _projected_gradient(g, p, lower):
    if lower is None:
        return g
    # at an active bound a positive gradient component points out of the box
    blocked = (p <= lower) & (g > 0)
    return np.where(blocked, 0.0, g)


def solve(problem: LeastSquaresProblem) -> SolveResult:
    """Minimize the sum of squared residuals starting from ``problem.p0``.

    Stops when the projected gradient ``||J^T r||_inf <= gtol``, when the step
    is below ``xtol * (xtol + ||p||)``, when an accepted step reduces the cost
    by less than ``ftol * cost``, or after ``max_iter`` iterations.
    """
    p = np.array(problem.p0, dtype=float).reshape(-1)
    lower = None
    if problem.lower is not None:
        lower = np.array(problem.lower, dtype=float).reshape(-1)
        if lower.shape != p.shape:
            raise InvalidProblemError(f"{lower.size} bounds for {p.size} parameters")
        if np.any(p < lower):
            raise InvalidProblemError("initial guess violates the lower bounds")

    def project(x):
        return x if lower is None else np.maximum(x, lower)

    def jac(x):
        if problem.jacobian is None:
            return numeric_jacobian(problem.residual, x)
        return np.atleast_2d(np.asarray(problem.jacobian(x), dtype=float))

    r = np.atleast_1d(np.asarray(problem.residual(p), dtype=float))
    J = jac(p)
    if r.ndim != 1 or J.shape != (r.size, p.size):
        raise InvalidProblemError(
            f"Jacobian shape {J.shape} does not match {r.size} residuals x {p.size} parameters"
        )
    if not (np.all(np.isfinite(r)) and np.all(np.isfinite(J))):
        raise NumericalError("non-finite residual or Jacobian at the initial guess")

    cost = float(r @ r)
    history = [cost]
    for hook in iteration_hooks:
        hook(0, cost)
    n_eval = 1
    lam = problem.lam0
    reason = MAX_ITER
    iteration = 0
    while iteration < problem.max_iter:
        g = J.T @ r
        if np.max(np.abs(_projected_gradient(g, p, lower)), initial=0.0) <= problem.gtol:
            reason = GTOL
            break
        A = J.T @ J
        d = np.diag(A).copy()
        d[d <= 0] = 1.0
        accepted = False
        while True:
            try:
                step = np.linalg.solve(A + lam * np.diag(d), -g)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(A + lam * np.diag(d), -g, rcond=None)[0]
            p_new = project(p + step)
            actual = p_new - p
            if np.linalg.norm(actual) <= problem.xtol * (problem.xtol + np.linalg.norm(p)):
                break
            r_new = np.atleast_1d(np.asarray(problem.residual(p_new), dtype=float))
            n_eval += 1
            cost_new = float(r_new @ r_new) if np.all(np.isfinite(r_new)) else np.inf
            if cost_new < cost:
                accepted = True
                lam /= problem.nu
                break
            lam *= problem.nu
            if lam > 1e20:
                break
        if not accepted:
            reason = XTOL
            break
        iteration += 1
        small_gain = cost - cost_new <= problem.ftol * cost
        p, r, cost = p_new, r_new, cost_new
        history.append(cost)
        for hook in iteration_hooks:
            hook(iteration, cost)
        if small_gain:
            reason = FTOL
            break
        J = jac(p)
        if not np.all(np.isfinite(J)):
            raise NumericalError(f"non-finite Jacobian at iteration {iteration}")
    return SolveResult(p=p, cost=cost, iterations=iteration, reason=reason,
                       cost_history=history, n_evaluations=n_eval)
