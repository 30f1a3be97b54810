"""Conjugate gradient / Armijo backtracking line search minimizer.

Used for every scalar subproblem in the toolkit: target-distance
minimization in the continuation method (with adjoint gradients) and the
analytic benchmark problems (with finite difference gradients).
"""

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class LineSearchParams:
    armijo_c: float = 1e-4      # sufficient decrease constant, in (0, 1)
    shrink: float = 0.5         # backtracking factor, in (0, 1)
    a0: float = 1.0             # initial trial step
    grad_tol: float = 1e-8
    max_iter: int = 1000
    max_backtracks: int = 40
    restart_every: int = 0      # 0: restart every n iterations (n = dim)

    def __post_init__(self):
        if not 0.0 < self.armijo_c < 1.0:
            raise ValueError("armijo_c must lie in (0, 1)")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError("shrink must lie in (0, 1)")
        if self.a0 <= 0.0 or self.grad_tol <= 0.0:
            raise ValueError("a0 and grad_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class MinimizeResult:
    x: np.ndarray
    fun: float
    grad_norm: float
    iterations: int
    f_evals: int
    grad_evals: int
    converged: bool
    message: str = ""


def cg_direction(g_i, g_im1, d_im1):
    """Fletcher-Reeves conjugate direction -g_i + beta * d_im1.

    beta = (g_i . g_i) / (g_im1 . g_im1); falls back to steepest descent
    when the previous gradient is zero (restart).
    """
    g_i = np.asarray(g_i, dtype=float)
    if g_im1 is None or d_im1 is None:
        return -g_i
    g_im1 = np.asarray(g_im1, dtype=float)
    denom = float(g_im1 @ g_im1)
    if denom == 0.0:
        return -g_i
    beta = float(g_i @ g_i) / denom
    return -g_i + beta * np.asarray(d_im1, dtype=float)


def armijo_backtrack(f, x, d, g, params, f_x=None):
    """Backtracking Armijo step length along the descent direction d.

    Returns (a, satisfied): the largest a in {a0 * shrink^j} with
    f(x + a d) <= f(x) + armijo_c * a * (g . d), or the smallest trial
    step with satisfied=False when the backtracking budget runs out.

    Raises ValueError if d is not a descent direction (g . d >= 0).
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    slope = float(np.asarray(g, dtype=float) @ d)
    if slope >= 0.0:
        raise ValueError(f"not a descent direction: g.d = {slope:g} >= 0")
    if f_x is None:
        f_x = float(f(x))
    a = params.a0
    for j in range(params.max_backtracks):
        if float(f(x + a * d)) <= f_x + params.armijo_c * a * slope:
            return a, True
        if j < params.max_backtracks - 1:
            a *= params.shrink
    log.warning("Armijo backtracking hit the shrink limit, returning a=%g", a)
    return a, False


def fd_gradient(f, x, h=1e-6):
    """Central finite difference gradient of f at x."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (float(f(x + e)) - float(f(x - e))) / (2.0 * h)
    return g


def gradient_check(f, grad, x, h=1e-6):
    """Relative error between grad(x) and a central difference probe."""
    g = np.asarray(grad(np.asarray(x, dtype=float)), dtype=float)
    g_fd = fd_gradient(f, x, h)
    scale = max(np.linalg.norm(g_fd), np.linalg.norm(g), 1e-30)
    return float(np.linalg.norm(g - g_fd) / scale)


def minimize(f, grad, x0, params=None, callback=None, check_gradient=False):
    """Minimize f by conjugate gradient directions with Armijo steps.

    Parameters
    ----------
    f : callable x -> float
    grad : callable x -> array, or None to use central differences
    x0 : array, start point
    params : LineSearchParams
    callback : optional, called with (iteration, x, f, g) per iteration
    check_gradient : bool
        Probe grad against finite differences at x0 and log the
        relative error (self-check mode).

    Returns MinimizeResult; converged means ||grad|| <= grad_tol.
    """
    if params is None:
        params = LineSearchParams()
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    if grad is None:
        grad = lambda y: fd_gradient(f, y)

    if check_gradient:
        rel = gradient_check(f, grad, x)
        log.info("gradient self-check at x0: relative error %.3e", rel)

    n = x.size
    restart_every = params.restart_every if params.restart_every > 0 else n
    f_evals = grad_evals = 0
    fx = float(f(x))
    f_evals += 1
    if not np.isfinite(fx):
        raise FloatingPointError("objective is not finite at the start point")

    g_prev = d_prev = None
    it = 0
    for it in range(1, params.max_iter + 1):
        g = np.asarray(grad(x), dtype=float)
        grad_evals += 1
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"gradient not finite at iteration {it}")
        gnorm = float(np.linalg.norm(g))
        if callback is not None:
            callback(it, x, fx, g)
        if gnorm <= params.grad_tol:
            return MinimizeResult(x, fx, gnorm, it, f_evals, grad_evals, True, "gradient tolerance reached")

        if g_prev is None or (it - 1) % restart_every == 0:
            d = -g
        else:
            d = cg_direction(g, g_prev, d_prev)
            if float(g @ d) >= 0.0:
                d = -g  # restart on non-descent
        counting = [0]

        def f_counted(y):
            counting[0] += 1
            return float(f(y))

        a, _ = armijo_backtrack(f_counted, x, d, g, params, f_x=fx)
        f_evals += counting[0]
        x_new = x + a * d
        fx_new = float(f(x_new))
        f_evals += 1
        if not np.isfinite(fx_new):
            raise FloatingPointError(f"objective not finite at iteration {it}")
        if fx_new > fx:
            # Armijo failed to produce decrease (shrink limit); keep x
            return MinimizeResult(x, fx, gnorm, it, f_evals, grad_evals, False, "line search stalled")
        x, fx = x_new, fx_new
        g_prev, d_prev = g, d

    g = np.asarray(grad(x), dtype=float)
    grad_evals += 1
    return MinimizeResult(x, fx, float(np.linalg.norm(g)), it, f_evals, grad_evals,
                          float(np.linalg.norm(g)) <= params.grad_tol, "iteration limit reached")
