"""Extended Galerkin reduced order model.

State equation for the mode coefficients alpha(t) in R^l:

    alpha' = A + B alpha + C(alpha) + D gamma' + (E + F alpha) gamma
             + G gamma^2,        C(alpha)_j = alpha^T Q_j alpha

with the coefficient arrays assembled from the mean field, the control
field and the POD modes through the three discrete-geometry forms.
Integration uses the classical fourth order Runge-Kutta scheme with
linear interpolation of the control between grid samples.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np


log = logging.getLogger(__name__)


@dataclass
class RomCoefficients:
    A: np.ndarray   # (l,)
    B: np.ndarray   # (l, l)
    Q: np.ndarray   # (l, l, l), C(alpha)_j = alpha^T Q[j] alpha
    D: np.ndarray   # (l,)
    E: np.ndarray   # (l,)
    F: np.ndarray   # (l, l)
    G: np.ndarray   # (l,)
    Re: float
    l: int

    def __post_init__(self):
        l = self.l
        shapes = {"A": (l,), "B": (l, l), "Q": (l, l, l), "D": (l,),
                  "E": (l,), "F": (l, l), "G": (l,)}
        for name, shape in shapes.items():
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
            setattr(self, name, arr)
        if self.Re <= 0:
            raise ValueError("Re must be positive")


def zero_coefficients(l, Re=1.0):
    return RomCoefficients(
        A=np.zeros(l), B=np.zeros((l, l)), Q=np.zeros((l, l, l)),
        D=np.zeros(l), E=np.zeros(l), F=np.zeros((l, l)), G=np.zeros(l),
        Re=Re, l=l,
    )


def assemble(basis, u_mean, u_control, geom, Re):
    """Galerkin coefficients from the mean field, control field and modes.

    u_control is the control field per unit rotation rate (the stored
    snapshot field divided by gamma_c). All inner products are delegated
    to the geometry provider; failures are re-raised naming the term.
    """
    if Re <= 0:
        raise ValueError("Re must be positive")
    modes = [basis.modes[:, i] for i in range(basis.l)]
    l = basis.l
    nu = 1.0 / Re
    c = zero_coefficients(l, Re)

    def form(term, fn, *args):
        try:
            return fn(*args)
        except Exception as exc:
            raise RuntimeError(f"geometry form failed while assembling {term}") from exc

    for i, psi_i in enumerate(modes):
        c.A[i] = (-form("A", geom.convect, u_mean, u_mean, psi_i)
                  - nu * form("A", geom.grad_inner, u_mean, psi_i))
        c.D[i] = -form("D", geom.inner, u_control, psi_i)
        c.E[i] = (-form("E", geom.convect, u_mean, u_control, psi_i)
                  - form("E", geom.convect, u_control, u_mean, psi_i)
                  - nu * form("E", geom.grad_inner, u_control, psi_i))
        c.G[i] = -form("G", geom.convect, u_control, u_control, psi_i)
        for j, psi_j in enumerate(modes):
            c.B[i, j] = (-form("B", geom.convect, u_mean, psi_j, psi_i)
                         - form("B", geom.convect, psi_j, u_mean, psi_i)
                         - nu * form("B", geom.grad_inner, psi_i, psi_j))
            c.F[i, j] = (-form("F", geom.convect, u_control, psi_j, psi_i)
                         - form("F", geom.convect, psi_j, u_control, psi_i))
    for j, psi_j in enumerate(modes):
        for i, psi_i in enumerate(modes):
            for k, psi_k in enumerate(modes):
                c.Q[j, i, k] = -form("Q", geom.convect, psi_i, psi_k, psi_j)
    return c


def quadratic_term(alpha, Q):
    """C(alpha): component j is alpha^T Q_j alpha."""
    alpha = np.asarray(alpha, dtype=float)
    return np.einsum("jik,i,k->j", Q, alpha, alpha)


def rhs(alpha, gamma, gdot, c):
    """Right-hand side of the state equation at one time instant."""
    alpha = np.asarray(alpha, dtype=float)
    return (c.A + c.B @ alpha + quadratic_term(alpha, c.Q) + c.D * gdot
            + (c.E + c.F @ alpha) * gamma + c.G * gamma ** 2)


def _rhs_batch(alpha, gamma, gdot, c):
    """rhs for a batch: alpha (n, l), gamma/gdot (n,) -> (n, l)."""
    # alpha^T Q_j alpha via one BLAS contraction plus an elementwise sum
    tmp = np.tensordot(alpha, c.Q, axes=([1], [1]))      # (n, j, k)
    quad = np.einsum("njk,nk->nj", tmp, alpha)
    return (c.A + alpha @ c.B.T + quad + np.outer(gdot, c.D)
            + (c.E + alpha @ c.F.T) * gamma[:, None]
            + np.outer(gamma ** 2, c.G))


@dataclass
class Trajectory:
    times: np.ndarray
    alpha: np.ndarray  # (l, steps + 1)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.alpha = np.asarray(self.alpha, dtype=float)
        if self.alpha.shape[1] != self.times.shape[0]:
            raise ValueError("trajectory columns must match the time grid")

    @property
    def dt(self):
        return float(self.times[1] - self.times[0])


def integrate(c, alpha0, u):
    """Classical RK4 integration of the state equation over u's grid."""
    u = u.with_rate()
    times = u.times
    n = times.shape[0]
    dt = float(u.dt)
    gamma, v = u.gamma, u.v
    g_mid = 0.5 * (gamma[1:] + gamma[:-1])
    v_mid = 0.5 * (v[1:] + v[:-1])
    A, B, Q, D, E, F, G = c.A, c.B, c.Q, c.D, c.E, c.F, c.G

    def f(a, g, gd):
        quad = np.einsum("jik,i,k->j", Q, a, a)
        return A + B @ a + quad + D * gd + (E + F @ a) * g + G * (g * g)

    alpha = np.empty((c.l, n))
    a = np.asarray(alpha0, dtype=float).copy()
    alpha[:, 0] = a
    for k in range(n - 1):
        k1 = f(a, gamma[k], v[k])
        k2 = f(a + 0.5 * dt * k1, g_mid[k], v_mid[k])
        k3 = f(a + 0.5 * dt * k2, g_mid[k], v_mid[k])
        k4 = f(a + dt * k3, gamma[k + 1], v[k + 1])
        a = a + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(a)):
            raise FloatingPointError(f"state blew up at t = {times[k + 1]:g}")
        alpha[:, k + 1] = a
    return Trajectory(times=times, alpha=alpha)


def integrate_batch(c, alpha0, gammas, rates, times):
    """RK4 for a batch of controls sharing one grid.

    alpha0 : (n, l) or (l,) broadcast to the batch.
    gammas, rates : (n, steps+1).
    Returns states of shape (n, steps+1, l).
    """
    gammas = np.atleast_2d(np.asarray(gammas, dtype=float))
    rates = np.atleast_2d(np.asarray(rates, dtype=float))
    n, n_nodes = gammas.shape
    dt = float(times[1] - times[0])
    alpha0 = np.asarray(alpha0, dtype=float)
    if alpha0.ndim == 1:
        alpha0 = np.broadcast_to(alpha0, (n, c.l))
    out = np.empty((n, n_nodes, c.l))
    out[:, 0] = alpha0
    a = alpha0.copy()
    for k in range(n_nodes - 1):
        g0, g1 = gammas[:, k], gammas[:, k + 1]
        v0, v1 = rates[:, k], rates[:, k + 1]
        gh, vh = 0.5 * (g0 + g1), 0.5 * (v0 + v1)
        k1 = _rhs_batch(a, g0, v0, c)
        k2 = _rhs_batch(a + 0.5 * dt * k1, gh, vh, c)
        k3 = _rhs_batch(a + 0.5 * dt * k2, gh, vh, c)
        k4 = _rhs_batch(a + dt * k3, g1, v1, c)
        a = a + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(a)):
            raise FloatingPointError(f"state blew up at t = {times[k + 1]:g}")
        out[:, k + 1] = a
    return out


def calibrate(c, alpha_proj, u_ref, ridge=1e-10):
    """Replace B by the least squares fit to projected snapshot data.

    Minimizes the equation residual sum_t || dalpha_p(t) - rhs(alpha_p(t),
    gamma_ref(t)) ||^2 over the entries of B, everything else fixed.  The
    time derivative of the data uses central differences, so only interior
    grid points enter the fit.  Rank-deficient normal equations fall back
    to a ridge-regularized solve (with a warning).
    """
    u_ref = u_ref.with_rate()
    alpha = alpha_proj.alpha
    if alpha.shape[1] != u_ref.gamma.shape[0]:
        raise ValueError("projected data and reference control grids differ")
    dt = alpha_proj.dt
    dalpha = (alpha[:, 2:] - alpha[:, :-2]) / (2.0 * dt)
    mid = slice(1, -1)
    a_mid = alpha[:, mid]
    g_mid = u_ref.gamma[mid]
    v_mid = u_ref.v[mid]

    rest = _rhs_batch(a_mid.T, g_mid, v_mid, replace(c, B=np.zeros_like(c.B)))
    y = dalpha.T - rest            # (T-2, l)
    x = a_mid.T                    # (T-2, l)
    gram = x.T @ x
    rhs_mat = x.T @ y
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > 1e12:
        log.warning("calibration normal equations are rank deficient (cond=%.2e), "
                    "using ridge %g", cond, ridge)
        gram = gram + ridge * np.eye(c.l)
    b_new = np.linalg.solve(gram, rhs_mat).T
    calibrated = replace(c, B=b_new)

    res_old = float(np.sum((y - x @ c.B.T) ** 2))
    res_new = float(np.sum((y - x @ b_new.T) ** 2))
    log.info("calibration residual %.3e -> %.3e", res_old, res_new)
    return calibrated


def equation_residual(c, alpha_proj, u_ref):
    """Sum of squared interior equation residuals (calibration objective)."""
    u_ref = u_ref.with_rate()
    alpha = alpha_proj.alpha
    dt = alpha_proj.dt
    dalpha = (alpha[:, 2:] - alpha[:, :-2]) / (2.0 * dt)
    pred = _rhs_batch(alpha[:, 1:-1].T, u_ref.gamma[1:-1], u_ref.v[1:-1], c)
    return float(np.sum((dalpha.T - pred) ** 2))


def objectives(traj, u, l, beta=0.0):
    """Objective pair (J1, J2) by composite trapezoid quadrature.

    J1 integrates the squared mode coefficients; J2 = l * integral of
    gamma^2 plus beta * integral of the squared control rate.
    """
    if traj.alpha.shape[1] != u.gamma.shape[0]:
        raise ValueError("trajectory and control live on different grids")
    if abs(traj.dt - u.dt) > 1e-12 * max(1.0, u.dt):
        raise ValueError("trajectory and control step sizes differ")
    dt = u.dt
    j1 = float(np.trapezoid(np.sum(traj.alpha ** 2, axis=0), dx=dt))
    j2 = float(l * np.trapezoid(u.gamma ** 2, dx=dt))
    if beta > 0.0:
        j2 += float(beta * np.trapezoid(u.rate() ** 2, dx=dt))
    return np.array([j1, j2])


# ---------------------------------------------------------------------------
# coefficient file
# ---------------------------------------------------------------------------

def write_coefficients(c, path, beta=0.0, provenance=""):
    """Text sections [A]..[G] with row-major floats plus a [meta] block."""
    arrays = [("A", c.A), ("B", c.B), ("Q", c.Q), ("D", c.D),
              ("E", c.E), ("F", c.F), ("G", c.G)]
    with open(path, "w") as fh:
        if provenance:
            fh.write(f"# {provenance}\n")
        for name, arr in arrays:
            fh.write(f"[{name}]\n")
            flat = np.asarray(arr).ravel()
            fh.write(" ".join(f"{v:.17g}" for v in flat) + "\n")
        fh.write("[meta]\n")
        fh.write(f"l={c.l}\n")
        fh.write(f"Re={c.Re:.17g}\n")
        fh.write(f"beta={beta:.17g}\n")


def read_coefficients(path):
    """Parse a coefficient file; returns (RomCoefficients, beta)."""
    sections = {}
    current = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1]
                sections[current] = []
            elif current is None:
                raise ValueError("coefficient file does not start with a section")
            else:
                sections[current].append(line)
    meta = dict(item.split("=", 1) for item in sections.pop("meta"))
    l = int(meta["l"])
    shapes = {"A": (l,), "B": (l, l), "Q": (l, l, l), "D": (l,),
              "E": (l,), "F": (l, l), "G": (l,)}
    arrays = {}
    for name, shape in shapes.items():
        flat = np.fromstring(" ".join(sections[name]), sep=" ")
        if flat.size != int(np.prod(shape)):
            raise ValueError(f"section [{name}] has {flat.size} values, expected {np.prod(shape)}")
        arrays[name] = flat.reshape(shape)
    c = RomCoefficients(Re=float(meta["Re"]), l=l, **arrays)
    return c, float(meta["beta"])
