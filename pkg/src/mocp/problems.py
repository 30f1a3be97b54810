"""Benchmark problems, control parameterizations and the snapshot generator.

The synthetic generator stands in for the expensive flow solver: it builds
two-component fields on a periodic grid from a rotating pattern pair whose
amplitude follows a saturating limit-cycle law, plus a mean field, a
control field and seeded measurement noise.  Its control couplings are the
closed-form discrete Galerkin products of the underlying Fourier fields,
so a reduced model assembled from the emitted snapshots recovers the true
dynamics (up to the cubic saturation term, which the model class cannot
express and which calibration absorbs in the mean).
"""

import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline

from .control import ControlSignal, time_grid
from .geometry import PeriodicGridGeometry
from .mop import MopProblem
from .pod import SnapshotSet
from .rom import integrate_batch, zero_coefficients

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# reference control and parameterizations
# ---------------------------------------------------------------------------

def chirp(t):
    """Frequency-sweeping reference control used to enrich snapshot data."""
    t = np.asarray(t, dtype=float)
    return -4.0 * np.sin(2.0 * np.pi * t / 120.0) * np.cos(
        2.0 * np.pi * t / 3.0 - 18.0 * np.sin(2.0 * np.pi * t / 60.0))


@dataclass
class ParameterizedControl:
    """A low-dimensional control description expandable onto a time grid.

    kind: 'sinusoidal' with values (A, omega, tau) meaning
          gamma(t) = A sin(2 pi omega t + tau);
          'spline' with values = break values of a natural cubic spline
          through equally spaced break points over [t0, te];
          'nodal' with one value per grid node.
    """
    kind: str
    values: np.ndarray
    t0: float
    te: float
    dt: float

    def __post_init__(self):
        self.values = np.atleast_1d(np.asarray(self.values, dtype=float))
        if self.kind not in ("sinusoidal", "spline", "nodal"):
            raise ValueError(f"unknown control kind {self.kind!r}")
        if self.kind == "sinusoidal" and self.values.shape != (3,):
            raise ValueError("sinusoidal control needs (A, omega, tau)")
        if self.kind == "spline" and self.values.size < 2:
            raise ValueError("spline control needs at least 2 break values")


def expand(pc):
    """Evaluate a parameterized control on its grid as a ControlSignal."""
    grid = time_grid(pc.t0, pc.te, pc.dt)
    if pc.kind == "sinusoidal":
        a, omega, tau = pc.values
        gamma = a * np.sin(2.0 * np.pi * omega * grid + tau)
        rate = a * 2.0 * np.pi * omega * np.cos(2.0 * np.pi * omega * grid + tau)
        return ControlSignal(pc.t0, pc.te, pc.dt, gamma, rate)
    if pc.kind == "spline":
        breaks = np.linspace(pc.t0, pc.te, pc.values.size)
        spline = CubicSpline(breaks, pc.values, bc_type="natural")
        return ControlSignal(pc.t0, pc.te, pc.dt, spline(grid), spline(grid, 1))
    if pc.values.shape != grid.shape:
        raise ValueError("nodal control must match the grid")
    return ControlSignal(pc.t0, pc.te, pc.dt, pc.values)


def expand_batch(kind, rows, t0, te, dt):
    """Expanded gamma and rate arrays, one row per parameter vector."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    grid = time_grid(t0, te, dt)
    if kind == "sinusoidal":
        a, omega, tau = rows[:, 0:1], rows[:, 1:2], rows[:, 2:3]
        phase = 2.0 * np.pi * omega * grid[None, :] + tau
        return a * np.sin(phase), a * 2.0 * np.pi * omega * np.cos(phase)
    if kind == "spline":
        breaks = np.linspace(t0, te, rows.shape[1])
        spline = CubicSpline(breaks, rows.T, axis=0, bc_type="natural")
        return spline(grid).T, spline(grid, 1).T
    if kind == "nodal":
        from .control import sampled_derivative
        rates = np.array([sampled_derivative(r, dt) for r in rows])
        return rows.copy(), rates
    raise ValueError(f"unknown control kind {kind!r}")


# ---------------------------------------------------------------------------
# analytic benchmark problems (known Pareto sets)
# ---------------------------------------------------------------------------

def convex_pair_1d():
    """J = (x^2, (x-1)^2) on [-2, 2]; Pareto set [0, 1], front
    sqrt(J1) + sqrt(J2) = 1."""
    def evaluate(x):
        return np.array([x[0] ** 2, (x[0] - 1.0) ** 2])

    def evaluate_many(xs):
        return np.column_stack([xs[:, 0] ** 2, (xs[:, 0] - 1.0) ** 2])

    return MopProblem(1, evaluate, bounds=[(-2.0, 2.0)],
                      evaluate_many=evaluate_many, name="convex1d")


def biquadratic_2d(a=(0.0, 0.0), b=(1.0, 0.0)):
    """J = (|x-a|^2, |x-b|^2); Pareto set is the segment [a, b]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)

    def evaluate(x):
        return np.array([np.sum((x - a) ** 2), np.sum((x - b) ** 2)])

    def evaluate_many(xs):
        return np.column_stack([np.sum((xs - a) ** 2, axis=1),
                                np.sum((xs - b) ** 2, axis=1)])

    return MopProblem(2, evaluate, bounds=[(-2.0, 2.0), (-2.0, 2.0)],
                      evaluate_many=evaluate_many, name="biquad2d")


def two_valley_1d():
    """Quartic double well against x^2: the Pareto front is disconnected,
    which defeats continuation along the front (the solver cannot jump the
    dominated gap) while the box covering finds both branches."""
    def j2(x):
        return ((x - 1.0) * (x - 3.0)) ** 2 / 4.0 - 0.1 * x

    def evaluate(x):
        return np.array([x[0] ** 2, j2(x[0])])

    def evaluate_many(xs):
        return np.column_stack([xs[:, 0] ** 2, j2(xs[:, 0])])

    return MopProblem(1, evaluate, bounds=[(-1.0, 4.0)],
                      evaluate_many=evaluate_many, name="two_valley")


def analytic_mops():
    """Catalog of desk-scale problems with known solution structure."""
    problems = [convex_pair_1d(), biquadratic_2d(), two_valley_1d()]
    return {p.name: p for p in problems}


# ---------------------------------------------------------------------------
# synthetic snapshot generator (flow solver stand-in)
# ---------------------------------------------------------------------------

@dataclass
class SurrogateConfig:
    """Shape and dynamics parameters of the synthetic wake surrogate.

    The spatial fields live on an n-by-n periodic grid over [0, 2 pi)^2.
    The pattern pair rotates with period shed_period; its amplitude obeys
    dr/dt = kappa r (1 - r^2 / r_inf^2).  The mean field advection predicts
    a rotation rate detuned from the true one by the factor (1 - detune),
    which is what model calibration must repair.
    """
    grid_n: int = 16
    shed_period: float = 5.0
    detune: float = 0.05
    kappa: float = 0.005
    r_inf: float = 1.0
    r0: float = 1.0
    phi0: float = 0.0
    mu2: float = 1.5
    c0: float = 0.1
    c1: float = 0.03
    c2: float = -0.0125
    gamma_c: float = 2.0
    re: float = 200.0
    noise: float = 2e-5


class SurrogateTruth:
    """The synthetic high-fidelity system: fields, dynamics, snapshots."""

    def __init__(self, config=None):
        self.config = config or SurrogateConfig()
        cfg = self.config
        self.geom = PeriodicGridGeometry(cfg.grid_n)
        n = cfg.grid_n
        x = self.geom.h * np.arange(n)
        length = self.geom.length

        def profile_field(values):
            return np.concatenate([np.tile(values, n), np.zeros(n * n)])

        self.eta = np.sqrt(2.0) / length
        self.rho = length ** 2 * self.eta / 2.0
        self.s1 = np.sin(self.geom.h) / self.geom.h
        self.s2 = np.sin(2.0 * self.geom.h) / self.geom.h

        self.omega_true = 2.0 * np.pi / cfg.shed_period
        self.mu0 = self.omega_true * (1.0 - cfg.detune) / self.s1

        self.phi1 = profile_field(self.eta * np.cos(x))
        self.phi2 = profile_field(self.eta * np.sin(x))
        self.u_mean = profile_field(self.mu0 + cfg.mu2 * np.sin(2.0 * x))
        self.u_control_unit = profile_field(
            cfg.c0 + cfg.c1 * np.cos(x) + cfg.c2 * np.sin(x))
        self.u_control = cfg.gamma_c * self.u_control_unit

        # closed-form Galerkin products of the fields above (the same
        # values the assembly routine computes from the grid operators)
        nu = 1.0 / cfg.re
        rho, s1, s2 = self.rho, self.s1, self.s2
        mu0, mu2 = self.mu0, cfg.mu2
        c1, c2 = cfg.c1, cfg.c2
        half = 0.5 * mu2 * (s2 - s1)
        self.D = -rho * np.array([c1, c2])
        self.E = -rho * np.array([
            mu0 * s1 * c2 + half * c1 + nu * s1 ** 2 * c1,
            -mu0 * s1 * c1 - half * c2 + nu * s1 ** 2 * c2,
        ])
        self.F = cfg.c0 * s1 * np.array([[0.0, -1.0], [1.0, 0.0]])
        self.G = rho * cfg.c0 * s1 * np.array([-c2, c1])

    # -- dynamics ------------------------------------------------------------
    def oscillator_rhs(self, a, gamma, gdot):
        cfg = self.config
        r2 = a @ a
        growth = cfg.kappa * (1.0 - r2 / cfg.r_inf ** 2)
        rot = self.omega_true * np.array([-a[1], a[0]])
        return (growth * a + rot + self.D * gdot
                + (self.E + self.F @ a) * gamma + self.G * gamma ** 2)

    def integrate_truth(self, u, a0=None):
        """Pattern amplitudes a(t) under the given control (RK4)."""
        cfg = self.config
        u = u.with_rate()
        if a0 is None:
            a0 = cfg.r0 * np.array([np.cos(cfg.phi0), np.sin(cfg.phi0)])
        grid = u.times
        dt = u.dt
        gamma, v = u.gamma, u.v
        g_mid = 0.5 * (gamma[1:] + gamma[:-1])
        v_mid = 0.5 * (v[1:] + v[:-1])
        out = np.empty((2, grid.size))
        a = np.asarray(a0, dtype=float).copy()
        out[:, 0] = a
        for k in range(grid.size - 1):
            k1 = self.oscillator_rhs(a, gamma[k], v[k])
            k2 = self.oscillator_rhs(a + 0.5 * dt * k1, g_mid[k], v_mid[k])
            k3 = self.oscillator_rhs(a + 0.5 * dt * k2, g_mid[k], v_mid[k])
            k4 = self.oscillator_rhs(a + dt * k3, gamma[k + 1], v[k + 1])
            a = a + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(a)):
                raise FloatingPointError(f"surrogate blew up at t = {grid[k + 1]:g}")
            out[:, k + 1] = a
        return out

    def initial_amplitudes(self):
        cfg = self.config
        return cfg.r0 * np.array([np.cos(cfg.phi0), np.sin(cfg.phi0)])

    def snapshots(self, gamma_ref, seed=0):
        """SnapshotSet of raw fields sampled along the reference control."""
        cfg = self.config
        a = self.integrate_truth(gamma_ref)
        fields = (self.u_mean[:, None]
                  + np.outer(self.phi1, a[0]) + np.outer(self.phi2, a[1])
                  + np.outer(self.u_control_unit, gamma_ref.gamma))
        if cfg.noise > 0.0:
            rng = np.random.default_rng(seed)
            fields = fields + cfg.noise * rng.standard_normal(fields.shape)
        return SnapshotSet(data=fields, dt=gamma_ref.dt, gamma_ref=gamma_ref,
                           U_c=self.u_control, gamma_c=cfg.gamma_c)

    def fluctuation_energy(self, u, a0=None):
        """High-fidelity J1: integral of the squared pattern amplitudes."""
        a = self.integrate_truth(u, a0=a0)
        return float(np.trapezoid(np.sum(a ** 2, axis=0), dx=u.dt))

    def reference_coefficients(self):
        """The model coefficients induced by the fields, in closed form.

        B holds the advection-predicted (detuned) linear part; the true
        rotation rate differs by the configured detuning factor and the
        cubic saturation has no slot in the model class.
        """
        cfg = self.config
        c = zero_coefficients(2, Re=cfg.re)
        nu = 1.0 / cfg.re
        omega_geom = self.mu0 * self.s1
        c.B[:] = np.array([[cfg.mu2 * (self.s1 - self.s2) / 2.0, -omega_geom],
                           [omega_geom, -cfg.mu2 * (self.s1 - self.s2) / 2.0]])
        c.B[:] += -nu * self.s1 ** 2 * np.eye(2)
        c.D[:] = self.D
        c.E[:] = self.E
        c.F[:] = self.F
        c.G[:] = self.G
        return c


def surrogate_snapshots(grid_n, gamma_ref, seed=0, config=None):
    """Convenience wrapper: snapshots of a surrogate with grid_n nodes."""
    if config is None:
        config = SurrogateConfig(grid_n=grid_n)
    else:
        config = replace(config, grid_n=grid_n)
    return SurrogateTruth(config).snapshots(gamma_ref, seed=seed)


# ---------------------------------------------------------------------------
# reduced-model multiobjective problems over parameterized controls
# ---------------------------------------------------------------------------

def rom_mop(c, alpha0, kind, n_params, t0, te, dt, bounds, beta=0.0, name=""):
    """Wrap a reduced model as a finite-dimensional multiobjective problem.

    Decision vectors are parameters of the chosen control kind; evaluation
    expands the control, integrates the model and returns (J1, J2) with
    J2 = l * integral gamma^2 (+ beta * integral of the squared rate).
    Batched evaluation integrates all rows simultaneously.
    """
    alpha0 = np.asarray(alpha0, dtype=float)
    grid = time_grid(t0, te, dt)
    w = np.full(grid.size, dt)
    w[0] = w[-1] = 0.5 * dt

    def evaluate_many(rows):
        gammas, rates = expand_batch(kind, rows, t0, te, dt)
        states = integrate_batch(c, alpha0, gammas, rates, grid)
        j1 = np.sum(states ** 2, axis=2) @ w
        j2 = c.l * (gammas ** 2) @ w
        if beta > 0.0:
            j2 = j2 + beta * (rates ** 2) @ w
        return np.column_stack([j1, j2])

    def evaluate(x):
        return evaluate_many(x[None, :])[0]

    return MopProblem(n_params, evaluate, bounds=bounds,
                      evaluate_many=evaluate_many, name=name or f"rom-{kind}")
