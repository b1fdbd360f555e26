"""Functional-calculus experiments.

Commands:
- calculus-bound: empirical H∞ constant of μ − A over the standard family
- bip-sweep: growth of ‖A^{is}‖ in |s|
- riesz: ‖∇(−Δ_Dir)^{−1/2}‖ with refinement
"""

import logging
import math

from pydantic import BaseModel, Field

from src.commands.common import (
    ExperimentOutput,
    Outcome,
    build_operator,
    is_flat,
    operator_grid,
    regime_warnings,
    relative_change,
    run_experiment,
    worker_pool,
)
from src.core.config import ExperimentConfig
from src.core.output import Table
from src.core.result import CommandResult, Warning
from src.core.types import (
    BoundaryCondition,
    BoundarySpec,
    ContourSpec,
    GridSpec,
    NormSpec,
    OperatorSpec,
    SweepSpec,
)
from src.numerics.calculus import bip_sweep, hinfty_bound_estimate, riesz_transform_norm, standard_family
from src.numerics.operators import assemble_laplacian

logger = logging.getLogger(__name__)

ROUGH_FACTOR = 2.0
BIP_SLOPE_LIMIT = 0.2
RIESZ_STABILITY = 0.25


class OperatorExperimentInput(BaseModel):
    """Fields shared by the operator-level calculus experiments."""

    norm: NormSpec
    operator: OperatorSpec = Field(default_factory=OperatorSpec)
    grid: GridSpec = Field(default_factory=GridSpec)
    contour: ContourSpec = Field(default_factory=ContourSpec)
    boundary: BoundarySpec | None = Field(default=None, description="Omit for the flat Laplacian")
    sweep: SweepSpec = Field(default_factory=SweepSpec)
    probes: int = Field(default=4, ge=1, description="Random probe vectors")
    seed: int = Field(default=0, ge=0)
    threads: int = Field(default=1, ge=1)

    @classmethod
    def from_config(cls, config: ExperimentConfig) -> "OperatorExperimentInput":
        return cls(
            norm=config.norm,
            operator=config.operator,
            grid=config.grid,
            contour=config.contour,
            boundary=config.boundary,
            sweep=config.sweep,
            probes=config.run.probes,
            seed=config.run.seed,
            threads=config.run.threads,
        )


# =============================================================================
# calculus-bound Command
# =============================================================================


class CalculusBoundInput(OperatorExperimentInput):
    """Input for the calculus-bound experiment."""


def _bound_table(name: str, estimate) -> Table:
    return Table(
        name=name,
        header=["function_label", "probe_id", "ratio"],
        rows=[[row.label, row.probe_id, row.ratio] for row in estimate.rows],
    )


def _calculus_bound(input: CalculusBoundInput) -> Outcome:
    grid = operator_grid(input.grid, input.boundary)
    family = standard_family(input.contour.angle)
    warnings = regime_warnings(input.operator.bc, input.norm, input.boundary)
    with worker_pool(input.threads) as executor:
        A = build_operator(grid, input.operator, input.boundary, input.seed)
        estimate = hinfty_bound_estimate(
            A, family, input.contour, input.probes, input.norm, input.seed, executor
        )
        tables = [_bound_table("calculus_bound", estimate)]
        summary: dict = {"constant": estimate.value, "skipped": len(estimate.skipped)}
        passed = math.isfinite(estimate.value)
        if not is_flat(input.boundary):
            flat = build_operator(grid, input.operator, None, input.seed)
            reference = hinfty_bound_estimate(
                flat, family, input.contour, input.probes, input.norm, input.seed, executor
            )
            tables.append(_bound_table("calculus_bound_flat", reference))
            summary["flat_constant"] = reference.value
            summary["ratio_to_flat"] = estimate.value / reference.value
            passed = passed and estimate.value <= ROUGH_FACTOR * reference.value
    for label in estimate.skipped:
        warnings.append(Warning(code="FUNCTION_SKIPPED", message=f"{label} is not finite on the contour"))
    summary["passed"] = passed
    return Outcome(
        output=ExperimentOutput(experiment="calculus-bound", tables=tables, summary=summary),
        reasoning=f"empirical H∞ constant {estimate.value:.4f} over {len(family)} functions",
        warnings=warnings,
    )


async def calculus_bound(input: CalculusBoundInput) -> CommandResult[ExperimentOutput]:
    """Estimate sup ‖f(A)v‖ / (‖f‖_∞‖v‖) over the standard function family."""
    return await run_experiment("calculus-bound", _calculus_bound, input)


# =============================================================================
# bip-sweep Command
# =============================================================================


class BipSweepInput(OperatorExperimentInput):
    """Input for the bip-sweep experiment."""


def _bip_sweep(input: BipSweepInput) -> Outcome:
    grid = operator_grid(input.grid, input.boundary)
    warnings = regime_warnings(input.operator.bc, input.norm, input.boundary)
    with worker_pool(input.threads) as executor:
        A = build_operator(grid, input.operator, input.boundary, input.seed)
        sweep = bip_sweep(
            A, input.sweep.s_values, input.probes, input.norm, input.contour, input.seed, executor
        )
    table = Table(name="bip_sweep", header=["s", "norm"], rows=[[row.s, row.norm] for row in sweep.rows])
    passed = sweep.slope <= BIP_SLOPE_LIMIT
    if not passed:
        warnings.append(
            Warning(code="BIP_GROWTH", message=f"log‖A^(is)‖ slope {sweep.slope:.3f} exceeds {BIP_SLOPE_LIMIT}")
        )
    return Outcome(
        output=ExperimentOutput(
            experiment="bip-sweep",
            tables=[table],
            summary={"slope": sweep.slope, "max_norm": max(r.norm for r in sweep.rows), "passed": passed},
        ),
        reasoning=f"fitted slope of log‖A^(is)‖ against |s| is {sweep.slope:.4f}",
        warnings=warnings,
    )


async def bip_sweep_command(input: BipSweepInput) -> CommandResult[ExperimentOutput]:
    """Estimate the imaginary powers ‖A^{is}‖ over the configured s values."""
    return await run_experiment("bip-sweep", _bip_sweep, input)


# =============================================================================
# riesz Command
# =============================================================================


class RieszInput(BaseModel):
    """Input for the riesz experiment."""

    norm: NormSpec
    grid: GridSpec = Field(default_factory=GridSpec)
    refinements: int = Field(default=1, ge=0, le=3)
    probes: int = Field(default=4, ge=1)
    seed: int = Field(default=0, ge=0)

    @classmethod
    def from_config(cls, config: ExperimentConfig) -> "RieszInput":
        return cls(
            norm=config.norm,
            grid=config.grid,
            refinements=config.sweep.refinements,
            probes=config.run.probes,
            seed=config.run.seed,
        )


def _riesz(input: RieszInput) -> Outcome:
    grid = operator_grid(input.grid, None)
    rows = []
    values = []
    for level in range(input.refinements + 1):
        A = assemble_laplacian(grid, BoundaryCondition.DIRICHLET)
        value = riesz_transform_norm(A, input.norm, input.probes, input.seed)
        logger.info("Riesz level %d: %d unknowns, norm %.4f", level, A.size, value)
        rows.append([level, A.size, value])
        values.append(value)
        grid = grid.refined()
    summary: dict = {"norm": values[-1]}
    warnings = []
    passed = math.isfinite(values[-1])
    if len(values) > 1:
        drift = relative_change(values[-2], values[-1])
        summary["refinement_drift"] = drift
        passed = passed and drift <= RIESZ_STABILITY
        if drift > RIESZ_STABILITY:
            warnings.append(
                Warning(code="REFINEMENT_DRIFT", message=f"Riesz norm moved by {drift:.1%} under refinement")
            )
    summary["passed"] = passed
    return Outcome(
        output=ExperimentOutput(
            experiment="riesz",
            tables=[Table(name="riesz", header=["level", "size", "norm"], rows=rows)],
            summary=summary,
        ),
        reasoning=f"‖∇(−Δ_Dir)^(-1/2)‖ ≈ {values[-1]:.4f} after {input.refinements} refinements",
        warnings=warnings,
    )


async def riesz(input: RieszInput) -> CommandResult[ExperimentOutput]:
    """Estimate the Riesz transform norm of the Dirichlet Laplacian."""
    return await run_experiment("riesz", _riesz, input)
