"""Projection onto capped simplices and projected-gradient descent.

Shared by the attack optimizers: the feasible sets there are always of the
form {x >= 0, sum(x) <= cap}.
"""

import numpy as np


class NonConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap; carries the iterate trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


def project_capped_simplex(y: np.ndarray, cap: float = 1.0) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum(x) <= cap}."""
    if cap < 0:
        raise ValueError("cap must be nonnegative")
    x = np.maximum(y, 0.0)
    if x.sum() <= cap:
        return x
    # Active budget: project onto the face sum(x) == cap (sort-based threshold).
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - cap
    idx = np.arange(1, y.size + 1)
    k = idx[u - css / idx > 0][-1]
    tau = css[k - 1] / k
    return np.maximum(y - tau, 0.0)


def finite_difference_grad(f, x: np.ndarray, h: float = 1e-7) -> np.ndarray:
    """Central finite differences, used when no analytic gradient is supplied."""
    g = np.empty_like(x)
    for i in range(x.size):
        step = h * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += step
        xm[i] -= step
        g[i] = (f(xp) - f(xm)) / (2 * step)
    return g


def stationarity_residual(x: np.ndarray, g: np.ndarray, cap: float) -> float:
    """Unit-step projected-gradient residual ||x - P(x - g)||_inf."""
    return float(np.max(np.abs(x - project_capped_simplex(x - g, cap))))


def projected_gradient(
    f,
    x0: np.ndarray,
    grad=None,
    cap: float = 1.0,
    tol: float = 1e-8,
    max_iter: int = 100_000,
) -> np.ndarray:
    """Minimize a smooth convex f over {x >= 0, sum(x) <= cap}.

    Armijo backtracking on the step size; terminates when the unit-step
    projected-gradient residual drops below tol.

    Raises:
        NonConvergenceError: iteration cap reached before the residual target.
    """
    if grad is None:
        grad = lambda x: finite_difference_grad(f, x)

    x = project_capped_simplex(np.asarray(x0, dtype=float), cap)
    fx = f(x)
    step = 1.0
    stalled = 0
    for _ in range(max_iter):
        g = grad(x)
        if stationarity_residual(x, g, cap) < tol:
            return x
        moved = False
        for _ in range(100):
            x_new = project_capped_simplex(x - step * g, cap)
            d = x_new - x
            if not np.any(d):
                if step >= 1.0:
                    # Fixed point of the projection at a non-vanishing step.
                    return x
                step *= 4.0
                continue
            f_new = f(x_new)
            # <g, d> <= -||d||^2/step < 0 by the projection property.
            if f_new <= fx + 1e-4 * np.dot(g, d):
                x, fx = x_new, f_new
                step = min(step * 1.5, 1e12)
                moved = True
                break
            step *= 0.5
        if not moved:
            stalled += 1
            # Armijo exhausted: the objective is flat to machine precision
            # along the descent direction.  Accept after repeated stalls.
            if stalled >= 3:
                return x
            step = 1.0
        else:
            stalled = 0
    raise NonConvergenceError(
        f"projected gradient did not reach tol={tol} in {max_iter} iterations",
        trace=x,
    )
