"""Proper orthogonal decomposition of snapshot data.

Pipeline: raw field snapshots are first decomposed into mean, control
contribution and fluctuations; the fluctuation snapshots feed the
mass-weighted correlation eigenproblem whose eigenvectors give the POD
modes.  Modes are orthonormal in the mass-weighted inner product, and the
eigenvalue spectrum determines the truncation level via the captured
energy ratio.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .control import ControlSignal

log = logging.getLogger(__name__)

DROP_TOL = 1e-12  # eigenvalues below DROP_TOL * sigma_1 count as zero


class MassWeighting:
    """Symmetric positive semidefinite weighting of the snapshot space.

    Either a diagonal weight vector or a sparse symmetric matrix built
    from (i, j, value) triplets.
    """

    def __init__(self, diagonal=None, matrix=None):
        if (diagonal is None) == (matrix is None):
            raise ValueError("provide exactly one of diagonal or matrix")
        if diagonal is not None:
            diagonal = np.asarray(diagonal, dtype=float)
            if np.any(diagonal < 0):
                raise ValueError("diagonal weights must be nonnegative")
        else:
            if (abs(matrix - matrix.T) > 1e-12 * (abs(matrix).max() or 1.0)).nnz:
                raise ValueError("mass weighting must be symmetric")
        self.diagonal = diagonal
        self.matrix = matrix

    @classmethod
    def identity(cls, n):
        return cls(diagonal=np.ones(n))

    @classmethod
    def from_triplets(cls, rows, cols, values, n):
        mat = sp.coo_matrix((values, (rows, cols)), shape=(n, n)).tocsr()
        coo = mat.tocoo()
        if np.array_equal(coo.row, coo.col):
            diag = np.zeros(n)
            diag[coo.row] = coo.data
            return cls(diagonal=diag)
        return cls(matrix=mat)

    @property
    def n(self):
        return self.diagonal.shape[0] if self.diagonal is not None else self.matrix.shape[0]

    def apply(self, x):
        """M @ x for a vector or a (n, k) stack of columns."""
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.n:
            raise ValueError(f"dimension mismatch: weighting is {self.n}, field is {x.shape[0]}")
        if self.diagonal is not None:
            return (x.T * self.diagonal).T
        return self.matrix @ x

    def inner(self, a, b):
        return float(np.asarray(a) @ self.apply(b))

    def triplets(self):
        if self.diagonal is not None:
            idx = np.arange(self.n)
            return idx, idx, self.diagonal
        coo = self.matrix.tocoo()
        return coo.row, coo.col, coo.data


@dataclass
class SnapshotSet:
    """Field snapshots with the metadata needed for the ROM pipeline.

    data : array (2N, m), one column per snapshot time.
    dt : snapshot spacing; snapshot j sits at t0 + j dt (t0 = gamma_ref.t0).
    gamma_ref : control applied while collecting the data, sampled at the
        snapshot times.
    U_c : steady control field recorded at constant rotation rate gamma_c.
    U_m : time average of the control-corrected field (None until
        decompose has run, unless supplied).
    """
    data: np.ndarray
    dt: float
    gamma_ref: ControlSignal
    U_c: np.ndarray
    gamma_c: float
    U_m: np.ndarray = None
    fluctuations: bool = False

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2 or self.data.shape[1] < 2:
            raise ValueError("snapshot matrix must be (2N, m) with m >= 2")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("snapshot data contains non-finite entries")
        self.U_c = np.asarray(self.U_c, dtype=float)
        if self.U_c.shape != (self.n_dof,):
            raise ValueError("U_c must match the snapshot dof count")
        if self.gamma_ref.gamma.shape[0] != self.n_snapshots:
            raise ValueError("gamma_ref must be sampled at the snapshot times")
        if abs(self.gamma_ref.dt - self.dt) > 1e-12 * max(1.0, self.dt):
            raise ValueError("gamma_ref grid spacing differs from snapshot dt")

    @property
    def n_dof(self):
        return self.data.shape[0]

    @property
    def n_snapshots(self):
        return self.data.shape[1]


def decompose(raw):
    """Two-step flow field decomposition into fluctuation snapshots.

    Subtracts the control contribution gamma_ref(t)/gamma_c * U_c from
    every column, then removes the time average of the corrected field.
    The returned columns have zero temporal mean.
    """
    if raw.fluctuations:
        raise ValueError("snapshot set already holds fluctuations")
    if raw.gamma_c == 0.0:
        raise ValueError("gamma_c must be nonzero")
    corrected = raw.data - np.outer(raw.U_c / raw.gamma_c, raw.gamma_ref.gamma)
    mean = corrected.mean(axis=1)
    fluct = corrected - mean[:, None]
    return replace(raw, data=fluct, U_m=mean, fluctuations=True)


@dataclass
class PodBasis:
    """Truncated POD basis.

    modes : (2N, l), orthonormal in the mass-weighted inner product.
    eigenvalues : all m eigenvalues of the correlation problem, descending.
    eps : captured energy ratio at truncation level l.
    """
    modes: np.ndarray
    eigenvalues: np.ndarray
    l: int
    eps: float


def truncation_error(sigma, l):
    """Captured energy ratio eps(l) = sum_{j<=l} sigma_j / sum_j sigma_j."""
    sigma = np.asarray(sigma, dtype=float)
    m = sigma.shape[0]
    if not 1 <= l <= m:
        raise ValueError(f"l must lie in [1, {m}]")
    total = float(np.sum(sigma))
    if total <= 0.0:
        raise ValueError("total energy is zero")
    return float(np.sum(sigma[:l]) / total)


def pod_modes(snaps, weighting, n_modes=None, eps_target=None):
    """Solve the m-dimensional correlation eigenproblem and build modes.

    Parameters
    ----------
    snaps : SnapshotSet (fluctuation snapshots)
    weighting : MassWeighting
    n_modes / eps_target : exactly one must be given. eps_target selects
        the smallest l with captured energy >= eps_target; eps_target >= 1
        keeps the full numerical rank.

    Modes are scaled so each one's largest-magnitude entry is positive.
    """
    if (n_modes is None) == (eps_target is None):
        raise ValueError("give exactly one of n_modes or eps_target")
    s = snaps.data
    corr = s.T @ weighting.apply(s)
    corr = 0.5 * (corr + corr.T)
    sigma, vecs = np.linalg.eigh(corr)
    order = np.argsort(sigma)[::-1]
    sigma = np.maximum(sigma[order], 0.0)
    vecs = vecs[:, order]

    if sigma[0] <= 0.0:
        raise ValueError("degenerate snapshot data: all eigenvalues vanish")
    rank = int(np.sum(sigma > DROP_TOL * sigma[0]))
    if n_modes is not None:
        if n_modes < 1:
            raise ValueError("n_modes must be >= 1")
        if n_modes > rank:
            log.warning("requested %d modes but numerical rank is %d", n_modes, rank)
        l = min(n_modes, rank)
    elif eps_target >= 1.0:
        l = rank
    else:
        energy = np.cumsum(sigma) / np.sum(sigma)
        l = int(np.searchsorted(energy, eps_target) + 1)
        l = min(l, rank)

    modes = s @ (vecs[:, :l] / np.sqrt(sigma[:l]))
    flips = np.abs(modes).argmax(axis=0)
    signs = np.sign(modes[flips, np.arange(l)])
    signs[signs == 0.0] = 1.0
    modes *= signs
    return PodBasis(modes=modes, eigenvalues=sigma, l=l, eps=truncation_error(sigma, l))


def project(field, basis, weighting):
    """Coefficients of a field (2N,) or trajectory (2N, T) in the basis."""
    field = np.asarray(field, dtype=float)
    if field.shape[0] != basis.modes.shape[0]:
        raise ValueError(
            f"field dimension {field.shape[0]} does not match modes {basis.modes.shape[0]}"
        )
    return basis.modes.T @ weighting.apply(field)


def reconstruct(alpha, basis):
    """Field (trajectory) synthesized from projection coefficients."""
    return basis.modes @ np.asarray(alpha, dtype=float)


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def _fmt_row(values):
    return " ".join(f"{v:.17g}" for v in values)


def write_snapshots(snaps, path, provenance=""):
    """Snapshot file: header lines, U_c row, U_m row (when known), the
    gamma_ref samples, then one row per snapshot column."""
    n = snaps.n_dof // 2
    with open(path, "w") as fh:
        if provenance:
            fh.write(f"# {provenance}\n")
        fh.write(f"nodes={n}\n")
        fh.write(f"snapshots={snaps.n_snapshots}\n")
        fh.write(f"dt={snaps.dt:.17g}\n")
        fh.write(f"gamma_c={snaps.gamma_c:.17g}\n")
        fh.write(_fmt_row(snaps.U_c) + "\n")
        if snaps.U_m is not None:
            fh.write(_fmt_row(snaps.U_m) + "\n")
        fh.write(_fmt_row(snaps.gamma_ref.gamma) + "\n")
        for j in range(snaps.n_snapshots):
            fh.write(_fmt_row(snaps.data[:, j]) + "\n")


def read_snapshots(path, t0=0.0):
    """Parse a snapshot file; the U_m row is detected by line count."""
    header = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" in line and len(line.split()) == 1:
                key, value = line.split("=", 1)
                header[key] = value
            else:
                rows.append(np.fromstring(line, sep=" "))
    for key in ("nodes", "snapshots", "dt", "gamma_c"):
        if key not in header:
            raise ValueError(f"snapshot file is missing the header line {key}=...")
    n = int(header["nodes"])
    m = int(header["snapshots"])
    dt = float(header["dt"])
    gamma_c = float(header["gamma_c"])
    if len(rows) == m + 3:
        u_c, u_m, gamma = rows[0], rows[1], rows[2]
        cols = rows[3:]
    elif len(rows) == m + 2:
        u_c, gamma = rows[0], rows[1]
        u_m = None
        cols = rows[2:]
    else:
        raise ValueError(f"snapshot file has {len(rows)} data rows, expected {m + 2} or {m + 3}")
    if u_c.shape[0] != 2 * n or gamma.shape[0] != m:
        raise ValueError("snapshot file row lengths are inconsistent with the header")
    data = np.stack(cols, axis=1)
    if data.shape != (2 * n, m):
        raise ValueError("snapshot rows do not match nodes/snapshots header")
    gamma_ref = ControlSignal(t0, t0 + (m - 1) * dt, dt, gamma)
    # files always hold raw fields; decompose() recomputes the mean
    return SnapshotSet(data=data, dt=dt, gamma_ref=gamma_ref, U_c=u_c,
                       gamma_c=gamma_c, U_m=u_m)


def write_mass_weighting(weighting, path):
    rows, cols, values = weighting.triplets()
    with open(path, "w") as fh:
        for i, j, v in zip(rows, cols, values):
            fh.write(f"{int(i)} {int(j)} {v:.17g}\n")


def read_mass_weighting(path, n):
    rows, cols, values = [], [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            i, j, v = line.split()
            rows.append(int(i))
            cols.append(int(j))
            values.append(float(v))
    return MassWeighting.from_triplets(rows, cols, values, n)


def write_modes(basis, path, provenance=""):
    """Modes file: same layout as snapshots with the eigenvalue spectrum."""
    n = basis.modes.shape[0] // 2
    with open(path, "w") as fh:
        if provenance:
            fh.write(f"# {provenance}\n")
        fh.write(f"nodes={n}\n")
        fh.write(f"modes={basis.l}\n")
        fh.write(_fmt_row(basis.eigenvalues) + "\n")
        for j in range(basis.l):
            fh.write(_fmt_row(basis.modes[:, j]) + "\n")


def read_modes(path):
    header = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" in line and len(line.split()) == 1:
                key, value = line.split("=", 1)
                header[key] = value
            else:
                rows.append(np.fromstring(line, sep=" "))
    n = int(header["nodes"])
    l = int(header["modes"])
    if len(rows) != l + 1:
        raise ValueError(f"modes file has {len(rows)} data rows, expected {l + 1}")
    sigma = rows[0]
    modes = np.stack(rows[1:], axis=1)
    if modes.shape != (2 * n, l):
        raise ValueError("mode rows do not match the header")
    return PodBasis(modes=modes, eigenvalues=sigma, l=l, eps=truncation_error(sigma, l))
