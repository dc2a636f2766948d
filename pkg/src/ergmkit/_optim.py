"""Damped Newton ascent shared by the estimators."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import MLENonexistent

# objective(theta) -> (value, gradient, information, hessian or None)
Objective = Callable[[np.ndarray], tuple[float, np.ndarray, np.ndarray, "np.ndarray | None"]]


def _safe(objective: Objective, theta: np.ndarray):
    # candidates far out in a curved direction can overflow; treat them as rejected steps
    try:
        with np.errstate(over="raise", invalid="raise"):
            out = objective(theta)
    except (OverflowError, FloatingPointError):
        return None
    if not (np.isfinite(out[0]) and np.all(np.isfinite(out[1]))):
        return None
    return out


def newton_ascent(objective: Objective, theta0: np.ndarray, tol: float = 1e-8, max_iter: int = 200,
                  divergence_cap: float = 50.0, accept: Callable[[np.ndarray], bool] | None = None):
    """Maximise ``objective`` from ``theta0``.

    Uses the Hessian when it is negative definite and the information matrix
    (Fisher scoring) otherwise; step halving until the objective does not
    decrease and ``accept(candidate)`` holds.  Returns ``(theta, value,
    gradient, information, iterations, converged)``.
    """
    theta = np.asarray(theta0, dtype=np.float64).copy()
    val, grad, info, hess = objective(theta)
    p = len(theta)
    it = 0
    converged = bool(np.max(np.abs(grad)) < tol) if p else True
    while not converged and it < max_iter:
        it += 1
        step = None
        if hess is not None:
            try:
                if np.all(np.linalg.eigvalsh(-hess) > 1e-10):
                    step = np.linalg.solve(-hess, grad)
            except np.linalg.LinAlgError:
                step = None
        if step is None:
            ridge = 1e-8 * max(1.0, float(np.trace(info)) / p)
            try:
                step = np.linalg.solve(info + ridge * np.eye(p), grad)
            except np.linalg.LinAlgError:
                step = grad
        alpha = 1.0
        moved = False
        for _ in range(50):
            cand = theta + alpha * step
            if np.all(np.isfinite(cand)) and (accept is None or accept(cand)):
                out = _safe(objective, cand)
                if out is not None and out[0] >= val - 1e-12 * max(1.0, abs(val)):
                    moved = True
                    break
            alpha *= 0.5
        if not moved:
            break
        theta = cand
        val, grad, info, hess = out
        if np.max(np.abs(theta)) > divergence_cap:
            raise MLENonexistent(f"parameter diverged (|theta|_inf = {np.max(np.abs(theta)):.1f} "
                                 f"> {divergence_cap})")
        converged = bool(np.max(np.abs(grad)) < tol)
    return theta, val, grad, info, it, converged
