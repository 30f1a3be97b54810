"""Multiobjective optimal control on reduced order models.

Builds POD-Galerkin reduced models from snapshot data and approximates
Pareto sets of two-objective control problems with a global subdivision
box covering or a reference point continuation driven by adjoint
gradients.
"""

__version__ = "0.1.0"

from .control import ControlSignal, time_grid, zero_control
from .geometry import PeriodicGridGeometry
from .linesearch import LineSearchParams, minimize
from .mop import MopProblem, dominates, leq_p, nondominated_filter, nondominated_indices
from .pod import MassWeighting, PodBasis, SnapshotSet, decompose, pod_modes, project
from .refpoint import ParetoTrace, RefPointParams, run_reference_point
from .rom import RomCoefficients, Trajectory, assemble, calibrate, integrate, objectives
from .subdivision import Box, BoxCollection, SubdivisionParams, run_subdivision

__all__ = [
    "ControlSignal", "time_grid", "zero_control",
    "PeriodicGridGeometry",
    "LineSearchParams", "minimize",
    "MopProblem", "dominates", "leq_p", "nondominated_filter", "nondominated_indices",
    "MassWeighting", "PodBasis", "SnapshotSet", "decompose", "pod_modes", "project",
    "ParetoTrace", "RefPointParams", "run_reference_point",
    "RomCoefficients", "Trajectory", "assemble", "calibrate", "integrate", "objectives",
    "Box", "BoxCollection", "SubdivisionParams", "run_subdivision",
    "__version__",
]
