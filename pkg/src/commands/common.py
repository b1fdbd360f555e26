"""Shared builders and output models for the experiment commands."""

import asyncio
import logging
from collections.abc import Callable, Iterator
from concurrent.futures import Executor, ThreadPoolExecutor
from contextlib import contextmanager
from typing import Any

from pydantic import BaseModel, Field

from src.core.errors import ErrorCode, FlatcalcError, ParameterError
from src.core.output import Table
from src.core.result import (
    CommandResult,
    Warning,
    check_failed,
    error,
    error_from_exception,
    success,
)
from src.core.types import BoundaryCondition, BoundarySpec, GridSpec, NormSpec, OperatorSpec
from src.numerics.boundary import make_boundary
from src.numerics.geometry import PullbackMap
from src.numerics.operators import DiscreteOperator, assemble_laplacian, assemble_pullback_laplacian
from src.numerics.spaces import HalfSpaceGrid, build_grid, theorem_regime

logger = logging.getLogger(__name__)

SummaryValue = float | int | str | bool | list[float] | None


class ExperimentOutput(BaseModel):
    """Tables and scalar summary produced by one experiment."""

    experiment: str = Field(..., description="Experiment name")
    tables: list[Table] = Field(default_factory=list, description="CSV tables to write")
    summary: dict[str, SummaryValue] = Field(
        default_factory=dict, description="Headline numbers and acceptance flags"
    )


class Outcome(BaseModel):
    """What the worker thread hands back to the async command."""

    output: ExperimentOutput
    reasoning: str
    warnings: list[Warning] = Field(default_factory=list)
    failed_checks: list[str] = Field(default_factory=list)


# =============================================================================
# Builders
# =============================================================================


def build_pullback(boundary: BoundarySpec, seed: int = 0) -> PullbackMap:
    """Catalog boundary → pullback with its seminorm estimate."""
    return PullbackMap.build(make_boundary(boundary), seed=seed)


def is_flat(boundary: BoundarySpec | None) -> bool:
    return boundary is None or boundary.name == "zero" or boundary.eps == 0.0


def operator_grid(grid: GridSpec, boundary: BoundarySpec | None) -> HalfSpaceGrid:
    """The half-space grid; a curved boundary needs a two-dimensional one."""
    if not is_flat(boundary):
        if boundary.dim != 2:
            raise ParameterError(
                f"operator experiments support d = 2 boundaries, got d = {boundary.dim}"
            )
        if grid.dim != 2:
            grid = grid.model_copy(update={"dim": 2})
    return build_grid(grid)


def build_operator(
    grid: HalfSpaceGrid,
    operator: OperatorSpec,
    boundary: BoundarySpec | None = None,
    seed: int = 0,
    bc: BoundaryCondition | None = None,
) -> DiscreteOperator:
    """Δ (flat boundary) or Δ^Ψ, carrying the configured shift μ."""
    bc = bc or operator.bc
    if bc == BoundaryCondition.NEUMANN and operator.mu <= 0:
        raise ParameterError("Neumann operators need μ > 0", code=ErrorCode.PARAMETER_OUT_OF_RANGE)
    if is_flat(boundary):
        return assemble_laplacian(grid, bc).with_mu(operator.mu)
    op, _ = assemble_pullback_laplacian(grid, build_pullback(boundary, seed), bc)
    return op.with_mu(operator.mu)


def regime_warnings(
    bc: BoundaryCondition, norm: NormSpec, boundary: BoundarySpec | None
) -> list[Warning]:
    """Warn when (p, k, γ, λ) lies outside the proven boundedness regime."""
    lam = 1.0 if is_flat(boundary) else boundary.holder
    regime = theorem_regime(bc, norm.p, norm.k, norm.gamma, lam)
    if regime.covered:
        return []
    logger.warning("Parameters outside the covered regime: %s", regime.reason)
    return [Warning(code="OUTSIDE_REGIME", message=regime.reason)]


def relative_change(coarse: float, fine: float) -> float:
    return abs(fine - coarse) / max(abs(coarse), 1e-300)


# =============================================================================
# Execution
# =============================================================================


@contextmanager
def worker_pool(threads: int) -> Iterator[Executor | None]:
    """A thread pool for independent work units; None runs serially."""
    if threads <= 1:
        yield None
        return
    with ThreadPoolExecutor(max_workers=threads, thread_name_prefix="flatcalc") as pool:
        yield pool


def map_units(executor: Executor | None, fn: Callable[[Any], Any], units: list[Any]) -> list[Any]:
    """Ordered map over work units."""
    if executor is None:
        return [fn(unit) for unit in units]
    return list(executor.map(fn, units))


async def run_experiment(
    name: str, work: Callable[..., Outcome], *args: Any
) -> CommandResult[ExperimentOutput]:
    """Run blocking numerical work off the event loop and wrap the outcome."""
    try:
        outcome = await asyncio.to_thread(work, *args)
    except FlatcalcError as exc:
        logger.error("%s failed: %s", name, exc.message)
        return error_from_exception(exc)
    except (ValueError, ArithmeticError) as exc:
        logger.exception("%s failed with an unexpected numerical error", name)
        return error(
            code=ErrorCode.INTERNAL_ERROR.value,
            message=str(exc),
            suggestion="Re-run with --verbose and report the log",
        )
    if outcome.failed_checks:
        message = f"{name}: failed checks: {', '.join(outcome.failed_checks)}"
        logger.error("%s", message)
        return check_failed(
            data=outcome.output,
            message=message,
            reasoning=outcome.reasoning,
            warnings=outcome.warnings,
        )
    return success(
        data=outcome.output,
        reasoning=outcome.reasoning,
        warnings=outcome.warnings,
    )
