"""Pareto dominance relations and the multiobjective problem interface.

Objective vectors are plain 1-d float arrays of length k >= 2, all entries
to be minimized.  Both solver front ends (box subdivision and reference
point continuation) build on the three relations defined here.
"""

import numpy as np


def as_objective(values):
    """Validate and return an objective vector as a float array.

    Requires k >= 2 finite entries.
    """
    v = np.atleast_1d(np.asarray(values, dtype=float))
    if v.ndim != 1 or v.size < 2:
        raise ValueError(f"objective vector must be 1-d with k >= 2 entries, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("objective vector contains non-finite entries")
    return v


def _check_pair(v, w):
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if v.shape != w.shape:
        raise ValueError(
            f"incompatible objective spaces: dimensions {v.shape} and {w.shape}"
        )
    return v, w


def leq_p(v, w):
    """Componentwise partial order: True iff v_i <= w_i for every i."""
    v, w = _check_pair(v, w)
    return bool(np.all(v <= w))


def dominates(v, w):
    """True iff v <= w componentwise and v != w.

    Identical points never dominate each other; comparisons are exact
    (no epsilon). Callers wanting tolerance must pre-round.
    """
    v, w = _check_pair(v, w)
    return bool(np.all(v <= w) and np.any(v != w))


def _nondominated_mask_2d(pts):
    """Sort-sweep nondominance mask for k = 2 (O(n log n)).

    A point is dominated iff some point has strictly smaller first
    component and second component <= its own, or equal first component
    and strictly smaller second component.
    """
    n = pts.shape[0]
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    j1 = pts[order, 0]
    j2 = pts[order, 1]
    new_group = np.empty(n, dtype=bool)
    new_group[0] = True
    new_group[1:] = j1[1:] != j1[:-1]
    gid = np.cumsum(new_group) - 1
    group_min = j2[new_group]                      # sorted within groups
    prev_min = np.concatenate(([np.inf], np.minimum.accumulate(group_min)[:-1]))
    dominated = (prev_min[gid] <= j2) | (group_min[gid] < j2)
    keep = np.empty(n, dtype=bool)
    keep[order] = ~dominated
    return keep


def nondominated_indices(points):
    """Indices of points not dominated by any other point in the list.

    Parameters
    ----------
    points : sequence of objective vectors, or array of shape (n, k)

    Returns
    -------
    list of int, in ascending order. The result does not depend on the
    input order (ties are all retained).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise ValueError("nondominated filter needs at least one point")
    n = pts.shape[0]
    if pts.shape[1] == 2:
        keep = _nondominated_mask_2d(pts)
        return [int(i) for i in np.nonzero(keep)[0]]
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        p = pts[i]
        le = np.all(pts <= p, axis=1)
        ne = np.any(pts != p, axis=1)
        if np.any(le & ne):
            keep[i] = False
    return [int(i) for i in np.nonzero(keep)[0]]


def nondominated_filter(points):
    """Return the nondominated subset of `points` (rows, original order)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return pts[nondominated_indices(pts)]


class MopProblem:
    """A finite-dimensional multiobjective problem min J(x), J: R^m -> R^k.

    Parameters
    ----------
    decision_dim : int
        Dimension m of the decision space.
    evaluate : callable
        Deterministic, pure map from decision point (1-d array of length m)
        to an objective vector (1-d array of length k).
    bounds : array of shape (m, 2), optional
        Box constraints [lo, hi] per dimension, lo < hi.
    evaluate_many : callable, optional
        Vectorized variant mapping (n, m) -> (n, k). Used by the box
        solver when present; must agree with `evaluate` row by row.
    name : str, optional
    """

    def __init__(self, decision_dim, evaluate, bounds=None, evaluate_many=None, name=""):
        if decision_dim < 1:
            raise ValueError("decision_dim must be a positive integer")
        self.decision_dim = int(decision_dim)
        self._evaluate = evaluate
        self._evaluate_many = evaluate_many
        self.name = name
        if bounds is not None:
            bounds = np.asarray(bounds, dtype=float).reshape(self.decision_dim, 2)
            if not np.all(bounds[:, 0] < bounds[:, 1]):
                raise ValueError("bounds must satisfy lo < hi componentwise")
        self.bounds = bounds

    def evaluate(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.decision_dim,):
            raise ValueError(f"decision point has shape {x.shape}, expected ({self.decision_dim},)")
        return as_objective(self._evaluate(x))

    def evaluate_many(self, xs):
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        if self._evaluate_many is not None:
            out = np.asarray(self._evaluate_many(xs), dtype=float)
            return out
        return np.array([self._evaluate(x) for x in xs], dtype=float)
