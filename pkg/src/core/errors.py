"""Standard error codes and exception types for flatcalc.

Error codes follow a consistent naming convention and are used across
all command responses for structured error handling. Library code raises
the exceptions below; commands convert them into error results.
"""

from enum import Enum


class ErrorCode(str, Enum):
    """Standard error codes for command responses."""

    # Validation errors
    VALIDATION_ERROR = "VALIDATION_ERROR"
    PARAMETER_OUT_OF_RANGE = "PARAMETER_OUT_OF_RANGE"
    EXCLUDED_WEIGHT = "EXCLUDED_WEIGHT"
    CONFIG_PARSE_ERROR = "CONFIG_PARSE_ERROR"
    UNKNOWN_EXPERIMENT = "UNKNOWN_EXPERIMENT"

    # Geometry errors
    DOMAIN_ERROR = "DOMAIN_ERROR"
    BOUNDARY_FLOOR = "BOUNDARY_FLOOR"
    TRACE_VIOLATION = "TRACE_VIOLATION"

    # Solver errors
    NOT_CONVERGED = "NOT_CONVERGED"
    NEAR_SPECTRUM = "NEAR_SPECTRUM"
    RESIDUAL_TOO_LARGE = "RESIDUAL_TOO_LARGE"
    CONTOUR_NOT_CONVERGED = "CONTOUR_NOT_CONVERGED"

    # Acceptance errors
    CHECK_FAILED = "CHECK_FAILED"

    # System errors
    INTERNAL_ERROR = "INTERNAL_ERROR"


VALIDATION_CODES = frozenset(
    {
        ErrorCode.VALIDATION_ERROR,
        ErrorCode.PARAMETER_OUT_OF_RANGE,
        ErrorCode.EXCLUDED_WEIGHT,
        ErrorCode.CONFIG_PARSE_ERROR,
        ErrorCode.UNKNOWN_EXPERIMENT,
    }
)


# Error message templates with recovery suggestions
ERROR_TEMPLATES = {
    ErrorCode.VALIDATION_ERROR: {
        "message": "Input validation failed",
        "suggestion": "Check the experiment configuration against 'flatcalc list'",
    },
    ErrorCode.PARAMETER_OUT_OF_RANGE: {
        "message": "Parameter outside its admissible range",
        "suggestion": "Adjust the named parameter to satisfy the stated constraint",
    },
    ErrorCode.EXCLUDED_WEIGHT: {
        "message": "Weight exponent lies in the excluded set γ = jp−1",
        "suggestion": "Move γ slightly away from jp−1",
    },
    ErrorCode.CONFIG_PARSE_ERROR: {
        "message": "Configuration file could not be parsed",
        "suggestion": "Use [section] headers and 'key = value' lines",
    },
    ErrorCode.UNKNOWN_EXPERIMENT: {
        "message": "Unknown experiment name",
        "suggestion": "Run 'flatcalc list' to see available experiments",
    },
    ErrorCode.DOMAIN_ERROR: {
        "message": "Point lies outside the domain of the map",
        "suggestion": "Sample points strictly above the boundary graph (x₁ > h(x̃)) or with y₁ > 0",
    },
    ErrorCode.BOUNDARY_FLOOR: {
        "message": "Evaluation point is closer to the boundary than the floor",
        "suggestion": "Increase the grid's x1_min or lower the pullback's y_floor",
    },
    ErrorCode.TRACE_VIOLATION: {
        "message": "Trial function violates the boundary condition",
        "suggestion": "Use trial functions with vanishing trace (Dirichlet) or normal trace (Neumann)",
    },
    ErrorCode.NOT_CONVERGED: {
        "message": "Iteration did not converge",
        "suggestion": "Check the Lipschitz scale L or raise the iteration limit",
    },
    ErrorCode.NEAR_SPECTRUM: {
        "message": "Resolvent point is numerically in the spectrum",
        "suggestion": "Move λ away from the spectrum or increase the shift μ",
    },
    ErrorCode.RESIDUAL_TOO_LARGE: {
        "message": "Linear solve residual exceeds tolerance",
        "suggestion": "The system is ill-conditioned; coarsen the boundary grading",
    },
    ErrorCode.CONTOUR_NOT_CONVERGED: {
        "message": "Contour quadrature did not converge",
        "suggestion": "Increase nodes_per_decade or widen [r_min, r_max]",
    },
    ErrorCode.CHECK_FAILED: {
        "message": "An acceptance check failed",
        "suggestion": "Inspect the checks table written to the output directory",
    },
    ErrorCode.INTERNAL_ERROR: {
        "message": "An internal error occurred",
        "suggestion": "Please try again or report this issue",
    },
}


def get_error_template(code: ErrorCode) -> dict:
    """Get the error message template for an error code.

    Args:
        code: The error code

    Returns:
        Dict with 'message' and 'suggestion' keys
    """
    return ERROR_TEMPLATES.get(
        code,
        {"message": "Unknown error", "suggestion": "Please try again"},
    )


def exit_code_for(code: str) -> int:
    """Process exit code for an error code: 2 for validation, 3 otherwise."""
    try:
        return 2 if ErrorCode(code) in VALIDATION_CODES else 3
    except ValueError:
        return 3


class FlatcalcError(Exception):
    """Base class for errors raised by the numerical layers."""

    default_code = ErrorCode.INTERNAL_ERROR

    def __init__(
        self,
        message: str,
        code: ErrorCode | None = None,
        suggestion: str | None = None,
    ) -> None:
        super().__init__(message)
        self.code = code or self.default_code
        self.message = message
        self.suggestion = suggestion or get_error_template(self.code)["suggestion"]

    @property
    def exit_code(self) -> int:
        return exit_code_for(self.code.value)


class ParameterError(FlatcalcError, ValueError):
    """A parameter or configuration value violates a precondition."""

    default_code = ErrorCode.VALIDATION_ERROR


class DomainError(FlatcalcError, ValueError):
    """A point lies outside the domain of a map."""

    default_code = ErrorCode.DOMAIN_ERROR


class BoundaryFloorError(DomainError):
    default_code = ErrorCode.BOUNDARY_FLOOR


class TraceViolationError(FlatcalcError, ValueError):
    default_code = ErrorCode.TRACE_VIOLATION


class NumericalError(FlatcalcError, ArithmeticError):
    """A numerical procedure failed."""

    default_code = ErrorCode.INTERNAL_ERROR


class NotConvergedError(NumericalError):
    default_code = ErrorCode.NOT_CONVERGED


class NearSpectrumError(NumericalError):
    default_code = ErrorCode.NEAR_SPECTRUM
