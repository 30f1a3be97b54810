"""Global derivative-free subdivision solver.

Approximates the Pareto set of a box-constrained multiobjective problem by
a nested sequence of box coverings: each round bisects every box along one
(cyclically chosen) coordinate, samples the boxes, and eliminates boxes
whose samples are all dominated by samples from other boxes.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .mop import nondominated_indices

log = logging.getLogger(__name__)


@dataclass
class Box:
    """Axis-aligned box with an archive of evaluated samples.

    center, radius : arrays of shape (m,); radius holds half-widths > 0.
    xs, js : arrays of evaluated sample points (n, m) and their objective
        values (n, k); every stored point lies inside the box.
    """
    center: np.ndarray
    radius: np.ndarray
    xs: np.ndarray = None
    js: np.ndarray = None
    failed: bool = False

    def __post_init__(self):
        self.center = np.atleast_1d(np.asarray(self.center, dtype=float))
        self.radius = np.atleast_1d(np.asarray(self.radius, dtype=float))
        if np.any(self.radius <= 0):
            raise ValueError("box radii must be positive")
        m = self.center.size
        if self.xs is None:
            self.xs = np.empty((0, m))
            self.js = np.empty((0, 0))

    @property
    def n_samples(self):
        return self.xs.shape[0]

    def contains(self, x, rtol=1e-12):
        return np.all(np.abs(x - self.center) <= self.radius * (1.0 + rtol) + rtol)

    def add_samples(self, xs, js):
        xs = np.atleast_2d(xs)
        js = np.atleast_2d(js)
        for x in xs:
            if not self.contains(x):
                raise ValueError(f"sample {x} lies outside box at {self.center}")
        if self.n_samples == 0:
            self.xs, self.js = xs.copy(), js.copy()
        else:
            self.xs = np.vstack([self.xs, xs])
            self.js = np.vstack([self.js, js])

    def diameter(self):
        return 2.0 * float(np.max(self.radius))


@dataclass
class SubdivisionParams:
    """Inputs of the subdivision run.

    n_sub : total number of subdivision/selection rounds (m * q rounds
        halve every dimension q times).
    samples_per_box : number S of fresh samples inserted per box per round.
    sampling : 'grid' (cell-centered lattice; S must be a perfect m-th
        power) or 'random' (uniform, seeded).
    """
    n_sub: int
    samples_per_box: int = 0    # 0: default min(4**m, 64), see default_samples
    sampling: str = "grid"
    seed: int = 0

    def __post_init__(self):
        if self.n_sub < 1:
            raise ValueError("n_sub must be >= 1")
        if self.samples_per_box < 0:
            raise ValueError("samples_per_box must be >= 1 (or 0 for the default)")
        if self.sampling not in ("grid", "random"):
            raise ValueError(f"unknown sampling strategy {self.sampling!r}")


def default_samples(m):
    """Default samples per box: 4^m capped at 64 (largest grid power below)."""
    if 4 ** m <= 64:
        return 4 ** m
    k = int(np.floor(64 ** (1.0 / m)))
    return max(k, 1) ** m


@dataclass
class BoxCollection:
    """Uniform-depth collection of boxes plus the next split dimension."""
    boxes: list
    generation: int = 0
    split_dim: int = 0
    eval_count: int = 0
    boxes_sampled: int = 0
    failed_boxes: int = 0

    @property
    def dim(self):
        return self.boxes[0].center.size

    def all_samples(self):
        """Stacked (xs, js, box_index) over all boxes with samples."""
        xs, js, owner = [], [], []
        for i, b in enumerate(self.boxes):
            if b.n_samples:
                xs.append(b.xs)
                js.append(b.js)
                owner.append(np.full(b.n_samples, i))
        if not xs:
            return np.empty((0, self.dim)), np.empty((0, 0)), np.empty(0, dtype=int)
        return np.vstack(xs), np.vstack(js), np.concatenate(owner)

    def union_volume(self):
        return float(sum(np.prod(2.0 * b.radius) for b in self.boxes))


def initial_collection(bounds):
    """One box spanning the given (m, 2) bounds."""
    bounds = np.asarray(bounds, dtype=float)
    center = 0.5 * (bounds[:, 0] + bounds[:, 1])
    radius = 0.5 * (bounds[:, 1] - bounds[:, 0])
    return BoxCollection(boxes=[Box(center, radius)])


def subdivide(coll):
    """Bisect every box along the collection's split dimension.

    The union of boxes is unchanged, the box count doubles, and parent
    samples are inherited by the child that contains them.
    """
    if not coll.boxes:
        raise ValueError("cannot subdivide an empty collection")
    d = coll.split_dim
    out = []
    for b in coll.boxes:
        r = b.radius.copy()
        r[d] *= 0.5
        for side in (-1.0, 1.0):
            c = b.center.copy()
            c[d] += side * r[d]
            child = Box(c, r)
            if b.n_samples:
                if side < 0:
                    mask = b.xs[:, d] <= b.center[d]
                else:
                    mask = b.xs[:, d] > b.center[d]
                if np.any(mask):
                    child.add_samples(b.xs[mask], b.js[mask])
            out.append(child)
    return BoxCollection(
        boxes=out,
        generation=coll.generation + 1,
        split_dim=(d + 1) % coll.dim,
        eval_count=coll.eval_count,
        boxes_sampled=coll.boxes_sampled,
        failed_boxes=coll.failed_boxes,
    )


def _grid_points(center, radius, s):
    m = center.size
    k = int(round(s ** (1.0 / m)))
    if k ** m != s:
        raise ValueError(f"grid sampling needs a perfect {m}-th power, got S={s}")
    offsets = (2.0 * np.arange(k) + 1.0) / (2.0 * k)  # cell centers in (0, 1)
    axes = [center[i] - radius[i] + 2.0 * radius[i] * offsets for i in range(m)]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def sample_points(box, params, generation, box_index):
    """Fresh sample locations for one box (deterministic per seed).

    The random strategy always places its first point at the box center,
    so distinguished points of the initial box (and of every refinement
    chain) stay represented no matter the dimension.
    """
    m = box.center.size
    s = params.samples_per_box or default_samples(m)
    if params.sampling == "grid":
        return _grid_points(box.center, box.radius, s)
    rng = np.random.default_rng([params.seed, generation, box_index])
    u = rng.uniform(-1.0, 1.0, size=(s, m))
    u[0] = 0.0
    return box.center + u * box.radius


def sample_box(box, params, problem, generation=0, box_index=0):
    """Insert S evaluated sampling points into the box.

    On evaluation failure the box is flagged and will be dropped by the
    next selection step; the incident is logged.
    """
    xs = sample_points(box, params, generation, box_index)
    try:
        js = problem.evaluate_many(xs)
        if not np.all(np.isfinite(js)):
            raise FloatingPointError("non-finite objective values")
    except Exception as exc:  # noqa: BLE001 - objective is user code
        log.warning("objective evaluation failed in box at %s: %s", box.center, exc)
        box.failed = True
        return box, xs.shape[0]
    box.add_samples(xs, js)
    return box, xs.shape[0]


def select(coll):
    """Eliminate boxes whose samples are all dominated by other boxes.

    A box survives iff at least one of its samples is not dominated by
    any sample belonging to a different box.  By transitivity of
    dominance this is exactly the set of boxes holding at least one
    globally nondominated sample: a dominator chain always ends at a
    nondominated point, and a box without nondominated samples cannot
    contain that endpoint.  At least one box always survives.
    """
    for b in coll.boxes:
        if not b.failed and b.n_samples == 0:
            raise ValueError("select requires every box to carry samples")
    live = [i for i, b in enumerate(coll.boxes) if not b.failed]
    dropped_failed = len(coll.boxes) - len(live)

    js, owner = _stack(coll, live)
    keep = []
    if js.size:
        front = nondominated_indices(js)
        owners_with_front = np.unique(owner[front])
        keep = [live[pos] for pos in owners_with_front]
    out = BoxCollection(
        boxes=[coll.boxes[i] for i in keep],
        generation=coll.generation,
        split_dim=coll.split_dim,
        eval_count=coll.eval_count,
        boxes_sampled=coll.boxes_sampled,
        failed_boxes=coll.failed_boxes + dropped_failed,
    )
    if not out.boxes:
        raise RuntimeError("selection removed every box (all evaluations failed?)")
    return out


def _stack(coll, indices):
    js, owner = [], []
    for pos, i in enumerate(indices):
        b = coll.boxes[i]
        if b.n_samples:
            js.append(b.js)
            owner.append(np.full(b.n_samples, pos))
    if not js:
        return np.empty((0, 0)), np.empty(0, dtype=int)
    return np.vstack(js), np.concatenate(owner)


def _sample_round(coll, params, problem, threads=1):
    """Insert fresh samples into every box, evaluating one joint batch.

    With threads > 1 the batch is split into chunks evaluated by a thread
    pool (the objective is pure; numpy releases the interpreter lock for
    the heavy parts).  Falls back to per-box evaluation when the joint
    batch fails, so a single bad box cannot poison the round.
    """
    points = [sample_points(b, params, coll.generation, i)
              for i, b in enumerate(coll.boxes)]
    try:
        stacked = np.vstack(points)
        if threads > 1 and stacked.shape[0] >= 2 * threads:
            from concurrent.futures import ThreadPoolExecutor
            chunks = np.array_split(stacked, threads)
            with ThreadPoolExecutor(max_workers=threads) as pool:
                js = np.vstack(list(pool.map(problem.evaluate_many, chunks)))
        else:
            js = problem.evaluate_many(stacked)
        bad = ~np.all(np.isfinite(js), axis=1)
    except Exception:  # noqa: BLE001 - objective is user code
        for idx, box in enumerate(coll.boxes):
            _, n_eval = sample_box(box, params, problem, coll.generation, idx)
            coll.eval_count += n_eval
            coll.boxes_sampled += 1
        return coll
    row = 0
    for box, pts in zip(coll.boxes, points):
        n = pts.shape[0]
        if np.any(bad[row:row + n]):
            log.warning("non-finite objectives in box at %s", box.center)
            box.failed = True
        else:
            box.add_samples(pts, js[row:row + n])
        row += n
        coll.eval_count += n
        coll.boxes_sampled += 1
    return coll


def run_subdivision(problem, params, threads=1):
    """Run n_sub subdivision/sampling/selection rounds from the bound box.

    Returns the final BoxCollection; eval_count reports the exact number
    of objective evaluations (boxes sampled times S per round).
    """
    if problem.bounds is None or not np.all(np.isfinite(problem.bounds)):
        raise ValueError("subdivision needs finite problem bounds")
    coll = initial_collection(problem.bounds)
    for _ in range(params.n_sub):
        coll = subdivide(coll)
        coll = _sample_round(coll, params, problem, threads=threads)
        coll = select(coll)
        log.debug("generation %d: %d boxes, %d evaluations",
                  coll.generation, len(coll.boxes), coll.eval_count)
    return coll


def export_boxes(coll, path, provenance=""):
    """Write one CSV row per box: center, radii, nondominated sample count."""
    _, js, owner = coll.all_samples()
    front = np.zeros(js.shape[0], dtype=bool)
    if js.size:
        front[nondominated_indices(js)] = True
    m = coll.dim
    counts = {i: int(np.sum(front[owner == i])) for i in range(len(coll.boxes))}
    with open(path, "w") as fh:
        if provenance:
            fh.write(f"# {provenance}\n")
        cols = [f"center_{i}" for i in range(m)] + [f"radius_{i}" for i in range(m)]
        fh.write(",".join(cols + ["nondominated_samples"]) + "\n")
        for i, b in enumerate(coll.boxes):
            vals = [f"{v:.17g}" for v in b.center] + [f"{v:.17g}" for v in b.radius]
            fh.write(",".join(vals + [str(counts[i])]) + "\n")
