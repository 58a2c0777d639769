"""
Error hierarchy for the wave stability toolkit.

Domain errors reject inputs that lie outside the admissible parameter set;
numerical failures signal that a tolerance could not be met.  Management
commands map the two branches onto exit codes 2 and 3.
"""

from typing import Any, Dict, Optional

from numpy.linalg import LinAlgError


class WaveStabilityError(Exception):
    """Base class for every error raised by the toolkit"""

    code = "wave_stability_error"
    exit_code = 1

    def __init__(self, message: str = "", details: Optional[Dict[str, Any]] = None):
        super().__init__(message or self.code)
        self.message = message or self.code
        self.details = dict(details or {})

    def as_dict(self) -> Dict[str, Any]:
        return {
            "schema": 1,
            "error": self.code,
            "message": self.message,
            "details": self.details,
        }


class DomainError(WaveStabilityError):
    code = "domain_error"
    exit_code = 2


class NumericalFailure(WaveStabilityError):
    code = "numerical_failure"
    exit_code = 3


# Domain errors


class UnsupportedOrder(DomainError):
    code = "unsupported_order"


class DegenerateCritical(DomainError):
    code = "degenerate_critical"


class NotNormalized(DomainError):
    code = "not_normalized"


class InvalidConfig(DomainError):
    code = "invalid_config"


class OnSeparatrix(DomainError):
    code = "on_separatrix"


class SonicSpeed(DomainError):
    code = "sonic_speed"


class EmptyRegion(DomainError):
    """No real traveling wave exists for the requested (E, c)"""

    code = "empty_region"


class UnboundedOrbit(DomainError):
    code = "unbounded_orbit"


class MultipleCriticalPoints(DomainError):
    code = "multiple_critical_points"


class NotLibrational(DomainError):
    code = "not_librational"


class NotEquilibrium(DomainError):
    code = "not_equilibrium"


class EvanescentCarrier(DomainError):
    code = "evanescent_carrier"


class PreconditionFailed(DomainError):
    code = "precondition_failed"


class SingularSystem(DomainError):
    code = "singular_system"


class DegenerateTangent(DomainError):
    code = "degenerate_tangent"


class DegenerateIndex(DomainError):
    code = "degenerate_index"


# Numerical failures


class QuadratureFailure(NumericalFailure):
    code = "quadrature_failure"


class PeriodOverflow(NumericalFailure):
    code = "period_overflow"


class IntegrationFailure(NumericalFailure):
    code = "integration_failure"


class ZeroLocationFailure(NumericalFailure):
    code = "zero_location_failure"


class StepUnderflow(NumericalFailure):
    code = "step_underflow"


class AbelViolation(NumericalFailure):
    code = "abel_violation"


class NewtonDivergence(NumericalFailure):
    code = "newton_divergence"


class NoGapFound(NumericalFailure):
    code = "no_gap_found"


class WindowTooNarrow(NumericalFailure):
    code = "window_too_narrow"


class UnexpectedNumerics(NumericalFailure):
    """A library-level arithmetic or linear algebra error escaped a computation"""

    code = "unexpected_numerics"

    @classmethod
    def wrap(cls, exc: Exception) -> "UnexpectedNumerics":
        return cls(f"{type(exc).__name__}: {exc}", {"type": type(exc).__name__})


# FloatingPointError is an ArithmeticError
UNEXPECTED_NUMERICS = (ArithmeticError, ValueError, LinAlgError)
