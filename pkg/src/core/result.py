"""Structured experiment results.

Every experiment command hands back a CommandResult: the tables and summary
on success, or an error code with a recovery hint, plus the numerical
warnings raised along the way. The CLI renders it and derives the exit code.
"""

from typing import Generic, TypeVar

from pydantic import BaseModel, Field

from src.core.errors import ErrorCode, FlatcalcError, exit_code_for, get_error_template

T = TypeVar("T")


class CommandError(BaseModel):
    """Failure description carried by an unsuccessful run."""

    code: str = Field(..., description="ErrorCode value, e.g. EXCLUDED_WEIGHT")
    message: str
    suggestion: str | None = Field(default=None, description="How to fix the input or the run")


class Warning(BaseModel):
    """A recoverable numerical condition (skipped probe, drift, regime)."""

    code: str
    message: str


class CommandResult(BaseModel, Generic[T]):
    """Outcome of one experiment.

    ``error`` is set exactly when ``success`` is false. ``data`` is set on
    success and on a failed acceptance check, whose tables are still written.
    ``reasoning`` is a one-line account of the headline number.
    """

    success: bool
    data: T | None = None
    error: CommandError | None = None

    reasoning: str | None = None
    warnings: list[Warning] | None = None
    suggestions: list[str] | None = None

    @property
    def exit_code(self) -> int:
        """0 on success, 2 for validation failures, 3 for numerical failures."""
        if self.success:
            return 0
        return exit_code_for(self.error.code if self.error else "")


def success(
    data: T,
    reasoning: str | None = None,
    warnings: list[Warning] | None = None,
    suggestions: list[str] | None = None,
) -> CommandResult[T]:
    """Wrap experiment output; an empty warning list is stored as None."""
    return CommandResult(
        success=True,
        data=data,
        reasoning=reasoning,
        warnings=warnings or None,
        suggestions=suggestions,
    )


def error(
    code: str,
    message: str,
    suggestion: str | None = None,
) -> CommandResult[None]:
    """Failed run with an ErrorCode value and an optional recovery hint."""
    return CommandResult(
        success=False,
        error=CommandError(code=code, message=message, suggestion=suggestion),
    )


def check_failed(
    data: T,
    message: str,
    reasoning: str | None = None,
    warnings: list[Warning] | None = None,
) -> CommandResult[T]:
    """The run finished but an acceptance check did not hold; exits 3."""
    return CommandResult(
        success=False,
        data=data,
        error=CommandError(
            code=ErrorCode.CHECK_FAILED.value,
            message=message,
            suggestion=get_error_template(ErrorCode.CHECK_FAILED)["suggestion"],
        ),
        reasoning=reasoning,
        warnings=warnings or None,
    )


def error_from_exception(exc: FlatcalcError) -> CommandResult[None]:
    """Convert a library exception into an error result."""
    return error(code=exc.code.value, message=exc.message, suggestion=exc.suggestion)
