"""Exception types shared across the package."""


class FluxDecError(Exception):
    """Base class for all package-specific errors."""


class StructuralError(FluxDecError):
    """Index/shape mismatch between a vector and the structure it lives on."""


class DomainViolation(FluxDecError):
    """Evaluation requested outside the domain of definition (boundary state)."""


class RangeError(FluxDecError):
    """Argument outside the numerically representable range (exp overflow)."""


class GridTooSmall(FluxDecError):
    """Numerical conjugation grid does not bracket the supremum."""


class NonUniqueMeasure(FluxDecError):
    """Rate matrix is reducible; no unique positive stationary measure."""


class NormalizationFailure(FluxDecError):
    """Zero-range renormalisation root could not be bracketed."""


class InfeasibleVelocity(FluxDecError):
    """Velocity is not in the range of the continuity operator."""


class OptimizationFailure(FluxDecError):
    """Damped Newton did not converge within the iteration budget."""


class StiffnessError(FluxDecError):
    """ODE step size underflowed before reaching the final time."""


class UnsupportedModel(FluxDecError):
    """Operation is not defined for this model family."""


class ModelSpecError(FluxDecError):
    """Model description file is malformed or violates an invariant."""
