"""Command line front end: generate, pod, rom, solve, validate.

Every command reads a flat key=value config file, takes common overrides
(--seed, --threads, --out) and writes deterministic text artifacts whose
provenance line records the tool version and a hash of the effective
configuration.  Exit codes: 0 success, 2 configuration or I/O problems,
3 degenerate snapshot data, 4 solver failure, 5 validation input defects.
"""

import argparse
import hashlib
import logging
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__
from .control import ControlSignal, time_grid, zero_control
from .geometry import PeriodicGridGeometry
from .linesearch import LineSearchParams
from .mop import nondominated_indices
from .pod import (MassWeighting, decompose, pod_modes, project,
                  read_mass_weighting, read_modes, read_snapshots,
                  truncation_error, write_mass_weighting, write_modes,
                  write_snapshots)
from .problems import (SurrogateConfig, SurrogateTruth, analytic_mops,
                       chirp, rom_mop)
from .refpoint import (RefPointParams, export_trace, make_adjoint_solver,
                       make_minimize_solver, run_reference_point)
from .rom import (Trajectory, assemble, calibrate, integrate, objectives,
                  read_coefficients, write_coefficients)
from .subdivision import SubdivisionParams, export_boxes, run_subdivision

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 2
EXIT_DEGENERATE = 3
EXIT_SOLVER = 4
EXIT_VALIDATION = 5


class ConfigError(Exception):
    pass


class DegenerateDataError(Exception):
    pass


class ValidationInputError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def _parse_bounds(text):
    if not text:
        return None
    out = []
    for part in text.split(","):
        lo, hi = part.split(":")
        out.append((float(lo), float(hi)))
    return out


_SCHEMA = {
    # problem and time window
    "problem": (str, "surrogate"),
    "t0": (float, 0.0),
    "te": (float, 10.0),
    "dt": (float, 0.05),
    # solver selection
    "solver": (str, "refpoint"),
    "control": (str, "nodal"),
    "spline_breaks": (int, 5),
    "bounds": (_parse_bounds, None),
    # subdivision parameters
    "n_sub": (int, 0),
    "q": (int, 6),
    "samples_per_box": (int, 0),
    "sampling": (str, "grid"),
    # continuation parameters
    "h_par": (float, 0.0),
    "h_perp": (float, 0.0),
    "h_p": (float, 1.0),
    "max_points": (int, 60),
    "scale1": (float, 1.0),
    "scale2": (float, 1.0),
    # scalar optimization
    "grad_tol": (float, 1e-5),
    "max_iter": (int, 200),
    "beta": (float, 1e-5),
    # model reduction
    "eps_target": (float, 0.99),
    "n_modes": (int, 0),
    # snapshot generation
    "grid_n": (int, 16),
    "gamma_c": (float, 2.0),
    "noise": (float, 2e-5),
    "reference": (str, "chirp"),
    "reference_amplitude": (float, 2.0),
    "snap_t0": (float, 0.0),
    "snap_te": (float, 60.0),
    "snap_dt": (float, 0.05),
    # file paths
    "snapshots": (str, ""),
    "mass": (str, ""),
    "modes": (str, ""),
    "coefficients": (str, ""),
    "front": (str, ""),
    "pareto_set": (str, ""),
    # run control
    "seed": (int, 0),
    "threads": (int, 1),
}

_PATH_KEYS = ("snapshots", "mass", "modes", "coefficients", "front", "pareto_set")


def read_config(path):
    """Parse a flat key=value file against the schema (unknown keys fail)."""
    values = {key: default for key, (_, default) in _SCHEMA.items()}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for ln, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected key=value, got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(f"{path}:{ln}: unknown config key {key!r}")
        caster = _SCHEMA[key][0]
        try:
            values[key] = caster(raw)
        except Exception as exc:
            raise ConfigError(f"{path}:{ln}: bad value for {key}: {raw!r}") from exc
    base = os.path.dirname(os.path.abspath(path))
    for key in _PATH_KEYS:
        if values[key]:
            values[key] = os.path.normpath(os.path.join(base, values[key]))
    return values


def config_hash(values):
    canon = "\n".join(f"{k}={values[k]}" for k in sorted(values))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def provenance(values):
    return f"mocp {__version__} config_sha256={config_hash(values)}"


# ---------------------------------------------------------------------------
# shared pipeline pieces
# ---------------------------------------------------------------------------

def surrogate_from_config(cfg):
    return SurrogateTruth(SurrogateConfig(grid_n=cfg["grid_n"],
                                          gamma_c=cfg["gamma_c"],
                                          noise=cfg["noise"]))


def reference_control(cfg):
    grid = time_grid(cfg["snap_t0"], cfg["snap_te"], cfg["snap_dt"])
    if cfg["reference"] == "zero":
        gamma = np.zeros(grid.size)
    elif cfg["reference"] == "chirp":
        gamma = (cfg["reference_amplitude"] / 4.0) * chirp(grid)
    else:
        raise ConfigError(f"unknown reference control {cfg['reference']!r}")
    return ControlSignal(cfg["snap_t0"], cfg["snap_te"], cfg["snap_dt"], gamma)


def load_weighting(cfg, snaps):
    if cfg["mass"]:
        return read_mass_weighting(cfg["mass"], snaps.n_dof)
    return MassWeighting.identity(snaps.n_dof)


def build_pod(cfg, snaps):
    fluct = decompose(snaps)
    weighting = load_weighting(cfg, snaps)
    kwargs = {"n_modes": cfg["n_modes"]} if cfg["n_modes"] > 0 else \
             {"eps_target": cfg["eps_target"]}
    try:
        basis = pod_modes(fluct, weighting, **kwargs)
    except ValueError as exc:
        raise DegenerateDataError(str(exc)) from exc
    return fluct, weighting, basis


def build_rom(cfg):
    """Assemble and calibrate the reduced model from the configured files."""
    if not cfg["snapshots"]:
        raise ConfigError("rom pipeline needs snapshots= in the config")
    snaps = read_snapshots(cfg["snapshots"])
    fluct, weighting, basis = build_pod(cfg, snaps)
    n = int(round(np.sqrt(snaps.n_dof // 2)))
    geom = PeriodicGridGeometry(n)
    c = assemble(basis, fluct.U_m, fluct.U_c / fluct.gamma_c, geom, 200.0)
    alpha_proj = project(fluct.data, basis, weighting)
    traj_proj = Trajectory(times=fluct.gamma_ref.times, alpha=alpha_proj)
    c = calibrate(c, traj_proj, fluct.gamma_ref)
    alpha0 = alpha_proj[:, 0]
    return c, alpha0, basis


def load_or_build_rom(cfg):
    if cfg["coefficients"] and os.path.exists(cfg["coefficients"]) \
            and cfg["snapshots"] and cfg["modes"]:
        c, _beta = read_coefficients(cfg["coefficients"])
        snaps = read_snapshots(cfg["snapshots"])
        basis = read_modes(cfg["modes"])
        fluct = decompose(snaps)
        weighting = load_weighting(cfg, snaps)
        alpha0 = project(fluct.data[:, 0], basis, weighting)
        return c, alpha0, basis
    return build_rom(cfg)


def write_csv(path, header, rows, prov):
    with open(path, "w") as fh:
        fh.write(f"# {prov}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt_cell(v) for v in row) + "\n")


def _fmt_cell(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_generate(cfg, out_dir):
    truth = surrogate_from_config(cfg)
    gamma_ref = reference_control(cfg)
    snaps = truth.snapshots(gamma_ref, seed=cfg["seed"])
    snaps = replace(snaps, U_m=None)  # the mean is recomputed downstream
    prov = provenance(cfg)
    write_snapshots(snaps, os.path.join(out_dir, "snapshots.txt"), provenance=prov)
    weighting = MassWeighting(diagonal=truth.geom.mass_diagonal())
    write_mass_weighting(weighting, os.path.join(out_dir, "mass.txt"))
    log.info("wrote %d snapshots of %d dofs", snaps.n_snapshots, snaps.n_dof)
    return EXIT_OK


def cmd_pod(cfg, out_dir):
    if not cfg["snapshots"]:
        raise ConfigError("pod needs snapshots= in the config")
    snaps = read_snapshots(cfg["snapshots"])
    fluct, weighting, basis = build_pod(cfg, snaps)
    prov = provenance(cfg)
    write_modes(basis, os.path.join(out_dir, "modes.txt"), provenance=prov)
    sigma = basis.eigenvalues
    rows = [(i + 1, sigma[i], truncation_error(sigma, i + 1))
            for i in range(sigma.size)]
    write_csv(os.path.join(out_dir, "spectrum.csv"),
              ["index", "sigma", "cumulative_energy"], rows, prov)
    log.info("retained %d of %d modes (captured energy %.6f)",
             basis.l, sigma.size, basis.eps)
    return EXIT_OK


def cmd_rom(cfg, out_dir):
    c, alpha0, basis = build_rom(cfg)
    prov = provenance(cfg)
    write_coefficients(c, os.path.join(out_dir, "coefficients.txt"),
                       beta=cfg["beta"], provenance=prov)
    log.info("assembled and calibrated a %d-mode model", c.l)
    return EXIT_OK


def _default_bounds(cfg, kind, m):
    if cfg["bounds"] is not None:
        if len(cfg["bounds"]) != m:
            raise ConfigError(f"bounds has {len(cfg['bounds'])} entries, expected {m}")
        return cfg["bounds"]
    if kind == "sinusoidal":
        return [(0.0, 4.0), (0.1, 0.4), (0.0, 2.0 * np.pi)]
    return [(-2.0, 2.0)] * m


def _solve_analytic(cfg, out_dir):
    catalog = analytic_mops()
    if cfg["problem"] not in catalog:
        raise ConfigError(f"unknown problem {cfg['problem']!r}")
    problem = catalog[cfg["problem"]]
    prov = provenance(cfg)
    counters = {"points_or_boxes": 0, "function_evals": 0, "adjoint_evals": 0}
    t_start = time.perf_counter()

    if cfg["solver"] == "subdivision":
        n_sub = cfg["n_sub"] or problem.decision_dim * cfg["q"]
        params = SubdivisionParams(n_sub=n_sub,
                                   samples_per_box=cfg["samples_per_box"],
                                   sampling=cfg["sampling"], seed=cfg["seed"])
        coll = run_subdivision(problem, params, threads=cfg["threads"])
        xs, js, _ = coll.all_samples()
        idx = nondominated_indices(js)
        front_rows = [(js[i, 0], js[i, 1]) for i in idx]
        set_rows = [tuple(xs[i]) for i in idx]
        export_boxes(coll, os.path.join(out_dir, "boxes.csv"), provenance=prov)
        counters["points_or_boxes"] = len(coll.boxes)
        counters["function_evals"] = coll.eval_count
        labels = [f"x_{i}" for i in range(problem.decision_dim)]
    else:
        scale = (cfg["scale1"], cfg["scale2"])
        seed_x = _extremal_seed(problem)
        j0 = problem.evaluate(seed_x)
        h_par = cfg["h_par"] or 0.02 * max(abs(j0[0]), abs(j0[1]), 1.0)
        h_perp = cfg["h_perp"] or h_par
        params = RefPointParams(h_par=h_par, h_perp=h_perp, h_p=cfg["h_p"],
                                max_points=cfg["max_points"],
                                objective_scale=scale)
        counting = {"n": 0}

        def counted_evaluate(x):
            counting["n"] += 1
            return problem.evaluate(x)

        problem_solver = make_minimize_solver(problem, objective_scale=scale)

        def counted_solver(target, warm):
            x, j, it, res, ok = problem_solver(target, warm)
            counting["n"] += 1
            return x, j, it, res, ok

        trace = run_reference_point(counted_evaluate, counted_solver, seed_x, params)
        export_trace(trace, os.path.join(out_dir, "trace.csv"), provenance=prov)
        front_rows = [(p.j[0], p.j[1]) for p in trace.points]
        set_rows = [tuple(p.x) for p in trace.points]
        counters["points_or_boxes"] = len(trace.points)
        counters["function_evals"] = trace.solver_iterations + counting["n"]
        labels = [f"x_{i}" for i in range(problem.decision_dim)]

    counters["wall_time"] = time.perf_counter() - t_start
    _write_solve_outputs(out_dir, prov, front_rows, set_rows, labels, counters)
    return EXIT_OK


def _extremal_seed(problem):
    """Seed the continuation at the scalar minimizer of J2."""
    from .linesearch import minimize

    x0 = problem.bounds.mean(axis=1) if problem.bounds is not None \
        else np.zeros(problem.decision_dim)
    res = minimize(lambda x: float(problem.evaluate(x)[1]), None, x0,
                   LineSearchParams(grad_tol=1e-10, max_iter=2000))
    return res.x


def _solve_surrogate(cfg, out_dir):
    c, alpha0, basis = load_or_build_rom(cfg)
    prov = provenance(cfg)
    t0, te, dt = cfg["t0"], cfg["te"], cfg["dt"]
    grid = time_grid(t0, te, dt)
    counters = {"points_or_boxes": 0, "function_evals": 0, "adjoint_evals": 0}
    t_start = time.perf_counter()

    if cfg["solver"] == "subdivision":
        kind = cfg["control"]
        if kind == "sinusoidal":
            m = 3
        elif kind == "spline":
            m = cfg["spline_breaks"]
        else:
            raise ConfigError("subdivision over the reduced model needs "
                              "control=sinusoidal or control=spline")
        bounds = _default_bounds(cfg, kind, m)
        problem = rom_mop(c, alpha0, kind, m, t0, te, dt, bounds,
                          name=f"rom-{kind}")
        n_sub = cfg["n_sub"] or m * cfg["q"]
        params = SubdivisionParams(n_sub=n_sub,
                                   samples_per_box=cfg["samples_per_box"],
                                   sampling=cfg["sampling"], seed=cfg["seed"])
        coll = run_subdivision(problem, params, threads=cfg["threads"])
        xs, js, _ = coll.all_samples()
        idx = nondominated_indices(js)
        front_rows = [(js[i, 0], js[i, 1]) for i in idx]
        gammas, _ = _expand_rows(kind, xs[idx], t0, te, dt)
        set_rows = [tuple(x) + tuple(g) for x, g in zip(xs[idx], gammas)]
        labels = [f"p_{i}" for i in range(m)] + [f"gamma_{k}" for k in range(grid.size)]
        export_boxes(coll, os.path.join(out_dir, "boxes.csv"), provenance=prov)
        counters["points_or_boxes"] = len(coll.boxes)
        counters["function_evals"] = coll.eval_count
    else:
        opt = LineSearchParams(grad_tol=cfg["grad_tol"], max_iter=cfg["max_iter"])
        solve_stats = {"f": 0, "adj": 0}
        solver = make_adjoint_solver(c, alpha0, t0, te, dt, cfg["beta"], opt,
                                     stats=solve_stats)
        u0 = zero_control(t0, te, dt)
        traj0 = integrate(c, alpha0, u0)
        j0 = objectives(traj0, u0, c.l, beta=cfg["beta"])
        h_par = cfg["h_par"] or 0.02 * max(abs(j0[0]), abs(j0[1]), 1.0)
        h_perp = cfg["h_perp"] or h_par
        params = RefPointParams(h_par=h_par, h_perp=h_perp, h_p=cfg["h_p"],
                                max_points=cfg["max_points"],
                                objective_scale=(cfg["scale1"], cfg["scale2"]),
                                directions=(1,))

        trace = run_reference_point(lambda x: j0, solver,
                                    np.zeros(grid.size), params)
        export_trace(trace, os.path.join(out_dir, "trace.csv"), provenance=prov,
                     decision_labels=[f"gamma_{k}" for k in range(grid.size)])
        front_rows = [(p.j[0], p.j[1]) for p in trace.points]
        set_rows = [tuple(p.x) for p in trace.points]
        labels = [f"gamma_{k}" for k in range(grid.size)]
        counters["points_or_boxes"] = len(trace.points)
        counters["function_evals"] = solve_stats["f"]
        counters["adjoint_evals"] = solve_stats["adj"]

    counters["wall_time"] = time.perf_counter() - t_start
    _write_solve_outputs(out_dir, prov, front_rows, set_rows, labels, counters)
    return EXIT_OK


def _expand_rows(kind, rows, t0, te, dt):
    from .problems import expand_batch
    return expand_batch(kind, rows, t0, te, dt)


def _write_solve_outputs(out_dir, prov, front_rows, set_rows, labels, counters):
    write_csv(os.path.join(out_dir, "pareto_front.csv"), ["J1", "J2"],
              front_rows, prov)
    write_csv(os.path.join(out_dir, "pareto_set.csv"), labels, set_rows, prov)
    write_csv(os.path.join(out_dir, "counters.csv"),
              ["points_or_boxes", "function_evals", "adjoint_evals", "wall_time"],
              [(counters["points_or_boxes"], counters["function_evals"],
                counters["adjoint_evals"], counters["wall_time"])], prov)


def cmd_solve(cfg, out_dir):
    if cfg["problem"] == "surrogate":
        return _solve_surrogate(cfg, out_dir)
    return _solve_analytic(cfg, out_dir)


def cmd_validate(cfg, out_dir):
    if not cfg["front"] or not cfg["pareto_set"]:
        raise ConfigError("validate needs front= and pareto_set= in the config")
    front = _read_csv(cfg["front"])
    pset = _read_csv(cfg["pareto_set"])
    gamma_cols = [i for i, name in enumerate(pset["header"])
                  if name.startswith("gamma_")]
    if not gamma_cols:
        raise ValidationInputError("pareto_set file carries no control columns")
    t0, te, dt = cfg["t0"], cfg["te"], cfg["dt"]
    grid = time_grid(t0, te, dt)
    if len(gamma_cols) != grid.size:
        raise ValidationInputError(
            f"control columns ({len(gamma_cols)}) do not match the grid ({grid.size})")

    if len(front["rows"]) != len(pset["rows"]):
        raise ValidationInputError(
            f"front has {len(front['rows'])} rows, pareto_set has {len(pset['rows'])}")
    truth = surrogate_from_config(cfg)
    c, alpha0, basis = load_or_build_rom(cfg)
    a0_truth = truth.initial_amplitudes()
    prov = provenance(cfg)

    rows = []
    j_pairs = []
    for front_row, set_row in zip(front["rows"], pset["rows"]):
        gamma = np.array([set_row[i] for i in gamma_cols])
        u = ControlSignal(t0, te, dt, gamma)
        traj = integrate(c, alpha0, u)
        # J2 carries no model error: the same quadrature of the same
        # samples reproduces the front value bit for bit
        j_rom = objectives(traj, u, c.l, beta=0.0)
        j1_hi = truth.fluctuation_energy(u, a0=a0_truth)
        rel = abs(j_rom[0] - j1_hi) / max(abs(j1_hi), 1e-30)
        rows.append([j_rom[0], j1_hi, j_rom[1], rel])
        j_pairs.append([j1_hi, j_rom[1]])

    # demotion report: which points lose nondominance after re-evaluation
    idx = set(nondominated_indices(np.array(j_pairs))) if j_pairs else set()
    for i, row in enumerate(rows):
        row.append(0 if i in idx else 1)
    write_csv(os.path.join(out_dir, "validation.csv"),
              ["J1_rom", "J1_highfi", "J2", "rel_error", "demoted"], rows, prov)
    demoted = [i for i in range(len(rows)) if i not in idx]
    if demoted:
        log.info("validation demotes %d points: %s", len(demoted), demoted)
    return EXIT_OK


def _read_csv(path):
    header = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cells = line.split(",")
            if header is None:
                header = cells
            else:
                rows.append([float(c) for c in cells])
    if header is None:
        raise ValidationInputError(f"{path} has no header row")
    return {"header": header, "rows": rows}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def main(argv=None):
    parser = argparse.ArgumentParser(prog="mocp", description=__doc__)
    parser.add_argument("command",
                        choices=["generate", "pod", "rom", "solve", "validate"])
    parser.add_argument("--config", required=True)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--out", default=".")
    args = parser.parse_args(argv)

    level = {"error": logging.ERROR, "info": logging.INFO,
             "debug": logging.DEBUG}.get(os.environ.get("MOCP_LOG", "error"))
    logging.basicConfig(level=level or logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")

    try:
        cfg = read_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.threads is not None:
            cfg["threads"] = args.threads
        if not os.path.isdir(args.out):
            raise ConfigError(f"output directory {args.out!r} does not exist")
        handler = {"generate": cmd_generate, "pod": cmd_pod, "rom": cmd_rom,
                   "solve": cmd_solve, "validate": cmd_validate}[args.command]
        return handler(cfg, args.out)
    except (ConfigError, OSError) as exc:
        log.error("%s", exc)
        print(f"mocp: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DegenerateDataError as exc:
        print(f"mocp: degenerate data: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ValidationInputError as exc:
        print(f"mocp: validation input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (RuntimeError, FloatingPointError, ValueError) as exc:
        print(f"mocp: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
