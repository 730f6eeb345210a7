"""Time-optimal, continuously collision-free trajectory planning for a
circular mobile robot among convex polytopic obstacles.

Two variants share one transcription: DECOUPLED freezes separating
hyperplanes as parameters and re-estimates them between solver iterations;
COUPLED keeps them as decision variables.
"""
from . import bench, bernstein, cli, dynamics, geometry, linalg_qp, planner, sqp, svm
from . import transcription
from .errors import (DegenerateLabelsError, InfeasibleSeparationError,
                     InvalidPolytopeError, NotPositiveDefiniteError,
                     RejectedProblemError, SplinesepError)
from .geometry import ConvexPolytope
from .planner import (CertificationReport, Planner, PlannerConfig, PlanResult,
                      certify_arrays, plan)
from .sqp import SqpSettings
from .transcription import COUPLED, DECOUPLED, HyperplaneSchedule, PlanningProblem

__version__ = "0.1.0"

__all__ = [
    "COUPLED", "DECOUPLED", "CertificationReport", "ConvexPolytope",
    "DegenerateLabelsError", "HyperplaneSchedule", "InfeasibleSeparationError",
    "InvalidPolytopeError", "NotPositiveDefiniteError", "Planner",
    "PlannerConfig", "PlanningProblem", "PlanResult", "RejectedProblemError",
    "SplinesepError", "SqpSettings", "bench", "bernstein", "certify_arrays", "cli",
    "dynamics", "geometry", "linalg_qp", "plan", "planner", "sqp", "svm",
    "transcription",
]
