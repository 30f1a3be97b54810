"""Reference point continuation along a two-objective Pareto front.

Starting from one (approximately) Pareto optimal point, targets are
placed outside the feasible region and moved along the front by linear
extrapolation; each target yields one scalar problem min ||T - J(x)||^2
whose solution is the next front point.  Sweeps run in up to two
directions and stop when the objective tracked by the current sweep
starts increasing again (the extremal point of the front is passed).
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .mop import nondominated_indices

log = logging.getLogger(__name__)


@dataclass
class RefPointParams:
    """Continuation step lengths and bookkeeping limits.

    h_par : target step along the front; h_perp : target offset away from
    the front; h_p : predictor extrapolation factor for warm starts.
    objective_scale : fixed per-objective factors applied before any
    target geometry, keeping the target-to-point offsets comparable.
    """
    h_par: float
    h_perp: float
    h_p: float = 1.0
    max_points: int = 100
    objective_scale: tuple = (1.0, 1.0)
    extremal_tol: float = 1e-9
    directions: tuple = (1, 2)

    def __post_init__(self):
        if self.h_par <= 0.0 or self.h_perp <= 0.0:
            raise ValueError("step lengths h_par and h_perp must be positive")
        if self.h_p < 0.0:
            raise ValueError("predictor factor h_p must be nonnegative")
        if self.max_points < 1:
            raise ValueError("max_points must be >= 1")
        if any(s <= 0 for s in self.objective_scale):
            raise ValueError("objective scales must be positive")


def first_target(j0, params):
    """T1 = J(x0) - (h_par, 0): just left of the seed point."""
    j0 = np.asarray(j0, dtype=float)
    return j0 - np.array([params.h_par, 0.0])


def next_target(j_i, j_im1, t_i, params):
    """Extrapolated target: follow the front direction, stay offset from it.

    T_{i+1} = J_i + h_par unit(J_i - J_{i-1}) + h_perp unit(T_i - J_i).
    """
    j_i = np.asarray(j_i, dtype=float)
    j_im1 = np.asarray(j_im1, dtype=float)
    t_i = np.asarray(t_i, dtype=float)
    step = j_i - j_im1
    offset = t_i - j_i
    n_step = np.linalg.norm(step)
    n_offset = np.linalg.norm(offset)
    if n_step == 0.0 or n_offset == 0.0:
        raise ValueError("stalled continuation: zero-length target geometry")
    return j_i + params.h_par * step / n_step + params.h_perp * offset / n_offset


def opposite_target(j0, j1, t1, params):
    """Restart target for the second sweep, mirroring the first step."""
    j0 = np.asarray(j0, dtype=float)
    j1 = np.asarray(j1, dtype=float)
    t1 = np.asarray(t1, dtype=float)
    step = j1 - j0
    offset = t1 - j1
    n_step = np.linalg.norm(step)
    n_offset = np.linalg.norm(offset)
    if n_step == 0.0 or n_offset == 0.0:
        raise ValueError("stalled continuation: zero-length target geometry")
    return j0 - params.h_par * step / n_step + params.h_perp * offset / n_offset


def predictor(x_i, x_im1, params):
    """Warm start for the next scalar solve: x_i + h_p (x_i - x_{i-1})."""
    x_i = np.asarray(x_i, dtype=float)
    x_im1 = np.asarray(x_im1, dtype=float)
    if x_i.shape != x_im1.shape:
        raise ValueError("predictor needs matching decision dimensions")
    return x_i + params.h_p * (x_i - x_im1)


@dataclass
class TracePoint:
    index: int
    run: int
    x: np.ndarray
    j: np.ndarray          # raw objective values
    target: np.ndarray     # target in raw objective units
    iterations: int
    residual: float


@dataclass
class ParetoTrace:
    points: list = field(default_factory=list)        # nondominated subset
    all_points: list = field(default_factory=list)    # every accepted solve
    skipped: int = 0
    aborted_runs: list = field(default_factory=list)
    solver_iterations: int = 0

    def objectives(self):
        return np.array([p.j for p in self.points])

    def decisions(self):
        return np.array([p.x for p in self.points])


def run_reference_point(evaluate, scalar_solver, x0, params):
    """Trace the front in up to two sweep directions from the seed x0.

    Parameters
    ----------
    evaluate : callable x -> raw objective pair (used for the seed point).
    scalar_solver : callable (target, x_warm) -> (x, j_raw, iterations,
        residual, ok).  Targets are expressed in scaled objective space.
    x0 : seed decision point, approximately Pareto optimal.
    params : RefPointParams.

    Returns a ParetoTrace whose points are mutually nondominated.
    """
    scale = np.asarray(params.objective_scale, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    j0_raw = np.asarray(evaluate(x0), dtype=float)
    j0 = scale * j0_raw

    trace = ParetoTrace()
    trace.all_points.append(TracePoint(0, 0, x0.copy(), j0_raw, j0 / scale, 0, 0.0))

    t1 = first_target(j0, params)
    first_sweep_j1 = None
    first_sweep_t1 = t1.copy()
    index = 0

    for run in params.directions:
        if run == 1:
            target = t1.copy()
        else:
            if first_sweep_j1 is None:
                log.warning("second sweep aborted: the first sweep produced no point")
                trace.aborted_runs.append(run)
                continue
            target = opposite_target(j0, first_sweep_j1, first_sweep_t1, params)
        x_prev, j_prev = x0, j0
        x_prev2 = None
        warm = x0.copy()
        failures = 0
        track = run - 1  # objective component watched for the extremal test

        while len(trace.all_points) - 1 < params.max_points:
            index += 1
            x_new, j_new_raw, iters, residual, ok = scalar_solver(target, warm)
            trace.solver_iterations += iters
            if not ok:
                trace.skipped += 1
                failures += 1
                log.warning("scalar solve for target %s failed, skipping", target)
                if failures >= 2:
                    trace.aborted_runs.append(run)
                    log.warning("sweep %d aborted after two consecutive failures", run)
                    break
                continue
            failures = 0
            j_new_raw = np.asarray(j_new_raw, dtype=float)
            j_new = scale * j_new_raw
            if run == 1 and first_sweep_j1 is None:
                first_sweep_j1 = j_new.copy()
            if j_new[track] > j_prev[track] + params.extremal_tol:
                # extremal point of the front passed; the sweep is done
                log.info("sweep %d passed the extremal point after %d points",
                         run, index)
                break
            trace.all_points.append(
                TracePoint(index, run, np.asarray(x_new, dtype=float).copy(),
                           j_new_raw, target / scale, iters, residual))
            try:
                target = next_target(j_new, j_prev, target, params)
            except ValueError as exc:
                log.warning("sweep %d stopped: %s", run, exc)
                trace.aborted_runs.append(run)
                break
            x_prev2 = x_prev
            x_prev, j_prev = np.asarray(x_new, dtype=float), j_new
            warm = predictor(x_prev, x_prev2, params) if x_prev2 is not None else x_prev

    js = np.array([p.j for p in trace.all_points])
    keep = set(nondominated_indices(js))
    trace.points = [p for i, p in enumerate(trace.all_points) if i in keep]
    return trace


def make_minimize_solver(problem, opt_params=None, objective_scale=(1.0, 1.0)):
    """Scalar solver for analytic problems: line search minimization of the
    squared target distance with finite difference gradients."""
    from .linesearch import LineSearchParams, minimize

    if opt_params is None:
        opt_params = LineSearchParams(grad_tol=1e-8, max_iter=2000)
    scale = np.asarray(objective_scale, dtype=float)

    def solver(target, x_warm):
        def f(x):
            d = target - scale * problem.evaluate(x)
            return float(d @ d)

        try:
            res = minimize(f, None, x_warm, opt_params)
        except FloatingPointError as exc:
            log.warning("scalar minimization failed: %s", exc)
            return x_warm, np.full(2, np.inf), 0, np.inf, False
        j_raw = problem.evaluate(res.x)
        # iteration-limited solves still return a usable near-optimal point
        ok = bool(np.all(np.isfinite(j_raw)))
        return res.x, j_raw, res.iterations, float(np.sqrt(res.fun)), ok

    return solver


def make_adjoint_solver(c, alpha0, t0, te, dt, beta, opt_params,
                        shoot_tol=None, stats=None):
    """Scalar solver backed by the augmented-system adjoint optimizer.

    Decision vectors are control samples gamma; the adapter derives the
    rate warm start, lets the solve shoot the initial value, and returns
    the optimized control samples with their raw objective pair.  When a
    dict is passed as stats, forward/adjoint evaluation counts accumulate
    in its 'f' and 'adj' keys.
    """
    from .adjoint import ScalarizedCost, solve_scalar_mocp
    from .control import ControlSignal
    from .rom import objectives

    def solver(target, gamma_warm):
        cost = ScalarizedCost(target=np.asarray(target, dtype=float), l=c.l, beta=beta)
        start = ControlSignal(t0, te, dt, np.asarray(gamma_warm, dtype=float))
        try:
            res = solve_scalar_mocp(c, cost, start, alpha0, system=2,
                                    opt=opt_params, shoot_tol=shoot_tol)
        except (RuntimeError, FloatingPointError) as exc:
            log.warning("adjoint solve failed: %s", exc)
            return gamma_warm, np.array([np.inf, np.inf]), 0, np.inf, False
        if stats is not None:
            stats["f"] = stats.get("f", 0) + res.f_evals
            stats["adj"] = stats.get("adj", 0) + res.adjoint_evals
        ok = res.converged or res.message in ("line search stalled",
                                              "iteration limit reached")
        # report the unregularized objective pair (the beta term is
        # solver-internal), keeping both solver families comparable
        j_report = objectives(res.trajectory, res.control, c.l, beta=0.0)
        return res.control.gamma, j_report, res.iterations, \
            float(np.sqrt(res.cost_value)), ok

    return solver


def export_trace(trace, path, provenance="", decision_labels=None):
    """CSV rows: index, run, decision parameters, J1, J2, T1, T2,
    solver iterations, residual."""
    with open(path, "w") as fh:
        if provenance:
            fh.write(f"# {provenance}\n")
        if trace.points:
            m = trace.points[0].x.size
        else:
            m = 0
        labels = decision_labels or [f"x_{i}" for i in range(m)]
        fh.write(",".join(["index", "run"] + labels
                          + ["J1", "J2", "T1", "T2", "iterations", "residual"]) + "\n")
        for p in trace.points:
            cells = [str(p.index), str(p.run)]
            cells += [f"{v:.17g}" for v in p.x]
            cells += [f"{p.j[0]:.17g}", f"{p.j[1]:.17g}",
                      f"{p.target[0]:.17g}", f"{p.target[1]:.17g}",
                      str(p.iterations), f"{p.residual:.17g}"]
            fh.write(",".join(cells) + "\n")
