"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Malformed or out-of-contract input (shapes, ranges, unknown names)."""


class BranchCutError(InvalidInputError):
    """Complex frequency sits on the square-root branch cut."""


class DomainError(ValueError):
    """State violates a geometric admissibility condition (e.g. the slope bound)."""


class NumericalError(RuntimeError):
    """A discrete solve failed (singular system, Newton stall)."""


class AccuracyError(RuntimeError):
    """A verified accuracy check (quadrature doubling, Richardson) did not converge."""


class NearDegenerateError(NumericalError):
    """Boundary-symbol determinant too close to zero for a stable solve."""
