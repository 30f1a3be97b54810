"""Discrete geometry provider for the Galerkin coefficient integrals.

The reduced model assembly only needs three bilinear/trilinear forms on
discrete two-component fields: the mass-weighted inner product (a, b),
the gradient inner product (grad a, grad b) and the convection form
((a . grad) b, c).  Any mesh/discretization can implement this interface;
the reference implementation lives on a uniform periodic grid with
central difference derivatives and uniform quadrature weights.

Field layout: a two-component field on N nodes is a flat array of length
2N, x-component first (entries 0..N-1), then the y-component.
"""

import numpy as np


class PeriodicGridGeometry:
    """Uniform n-by-n periodic grid on [0, length)^2.

    Node (p, q) sits at (p h, q h) with h = length / n and maps to flat
    index p + n*q.  Quadrature weight per node is h^2, so inner products
    approximate the continuum integrals over the doubly periodic square.
    """

    def __init__(self, n, length=2.0 * np.pi):
        if n < 4:
            raise ValueError("grid needs at least 4 nodes per side")
        self.n = int(n)
        self.length = float(length)
        self.h = self.length / self.n
        self.n_nodes = self.n * self.n
        self.n_dof = 2 * self.n_nodes
        self.weight = self.h ** 2

    # -- helpers -----------------------------------------------------------
    def components(self, a):
        a = np.asarray(a, dtype=float)
        if a.shape != (self.n_dof,):
            raise ValueError(f"field has shape {a.shape}, expected ({self.n_dof},)")
        ax = a[: self.n_nodes].reshape(self.n, self.n)  # [q, p] rows are y
        ay = a[self.n_nodes:].reshape(self.n, self.n)
        return ax, ay

    def flatten(self, ax, ay):
        return np.concatenate([np.ravel(ax), np.ravel(ay)])

    def ddx(self, comp):
        return (np.roll(comp, -1, axis=1) - np.roll(comp, 1, axis=1)) / (2.0 * self.h)

    def ddy(self, comp):
        return (np.roll(comp, -1, axis=0) - np.roll(comp, 1, axis=0)) / (2.0 * self.h)

    def grid(self):
        """Coordinate arrays (x, y), each of shape (n, n)."""
        coords = self.h * np.arange(self.n)
        return np.meshgrid(coords, coords, indexing="xy")

    # -- the three forms ----------------------------------------------------
    def inner(self, a, b):
        """Mass weighted inner product (a, b)."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if a.shape != b.shape:
            raise ValueError("field shapes differ")
        return self.weight * float(a @ b)

    def grad_inner(self, a, b):
        """(grad a, grad b), summed over both components and directions."""
        ax, ay = self.components(a)
        bx, by = self.components(b)
        total = 0.0
        for ac, bc in ((ax, bx), (ay, by)):
            total += np.sum(self.ddx(ac) * self.ddx(bc))
            total += np.sum(self.ddy(ac) * self.ddy(bc))
        return self.weight * float(total)

    def convect(self, a, b, c):
        """Convection form ((a . grad) b, c)."""
        ax, ay = self.components(a)
        cx, cy = self.components(c)
        bx, by = self.components(b)
        conv_x = ax * self.ddx(bx) + ay * self.ddy(bx)
        conv_y = ax * self.ddx(by) + ay * self.ddy(by)
        return self.weight * float(np.sum(conv_x * cx) + np.sum(conv_y * cy))

    def mass_diagonal(self):
        """Diagonal of the (lumped) mass weighting, length 2N."""
        return np.full(self.n_dof, self.weight)
