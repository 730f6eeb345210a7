"""Exception types shared across the package."""


class SplinesepError(Exception):
    """Base class for all package errors."""


class InvalidPolytopeError(SplinesepError, ValueError):
    """Vertex list does not describe a strictly convex CCW polygon."""


class NotPositiveDefiniteError(SplinesepError, ValueError):
    """Cholesky factorization hit a non-positive pivot."""

    def __init__(self, pivot: int, value: float):
        self.pivot = pivot
        self.value = value
        super().__init__(f"matrix not positive definite at pivot {pivot} (value {value:.3e})")


class DegenerateLabelsError(SplinesepError, ValueError):
    """Saddle system has all samples in one class; no hyperplane offset exists."""


class InfeasibleSeparationError(SplinesepError, RuntimeError):
    """Hard-margin QP is infeasible (classes not strictly separable); use the LS path."""


class RejectedProblemError(SplinesepError, ValueError):
    """Planning problem rejected before transcription (e.g. start or goal in collision)."""
