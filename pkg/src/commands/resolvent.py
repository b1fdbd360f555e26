"""resolvent-scan: ‖λR(λ, μ − A)‖ along rays of the sector, with refinement."""

import logging

from pydantic import BaseModel, Field

from src.commands.common import (
    ExperimentOutput,
    Outcome,
    build_operator,
    operator_grid,
    regime_warnings,
    relative_change,
    run_experiment,
    worker_pool,
)
from src.core.config import ExperimentConfig
from src.core.output import Table
from src.core.result import CommandResult, Warning
from src.core.types import BoundarySpec, GridSpec, NormSpec, OperatorSpec, SweepSpec
from src.numerics.operators import ritz_values, sectoriality_scan

logger = logging.getLogger(__name__)

SCAN_HEADER = ["theta", "r", "norm_estimate", "iterations", "flag"]
REFINEMENT_STABILITY = 0.2


class ResolventScanInput(BaseModel):
    """Input for the resolvent-scan experiment."""

    norm: NormSpec
    operator: OperatorSpec = Field(default_factory=OperatorSpec)
    grid: GridSpec = Field(default_factory=GridSpec)
    boundary: BoundarySpec | None = Field(default=None, description="Omit for the flat Laplacian")
    sweep: SweepSpec = Field(default_factory=SweepSpec, description="Angles, radii and refinements")
    seed: int = Field(default=0, ge=0)
    threads: int = Field(default=1, ge=1)

    @classmethod
    def from_config(cls, config: ExperimentConfig) -> "ResolventScanInput":
        return cls(
            norm=config.norm,
            operator=config.operator,
            grid=config.grid,
            boundary=config.boundary,
            sweep=config.sweep,
            seed=config.run.seed,
            threads=config.run.threads,
        )


def _work(input: ResolventScanInput) -> Outcome:
    grid = operator_grid(input.grid, input.boundary)
    radii = input.sweep.radii()
    warnings = regime_warnings(input.operator.bc, input.norm, input.boundary)
    tables = []
    levels: list[dict[float, float]] = []
    with worker_pool(input.threads) as executor:
        for level in range(input.sweep.refinements + 1):
            A = build_operator(grid, input.operator, input.boundary, input.seed)
            logger.info("Resolvent scan level %d on %d unknowns", level, A.size)
            scan = sectoriality_scan(
                A, input.operator.mu, input.sweep.angles, radii, input.norm, input.seed, executor
            )
            name = "resolvent_scan" if level == 0 else f"resolvent_scan_refined_{level}"
            tables.append(Table(name=name, header=SCAN_HEADER, rows=[list(row) for row in scan.rows]))
            levels.append(scan.suprema)
            if level == 0:
                ritz = ritz_values(A, seed=input.seed)
            grid = grid.refined()

    suprema = levels[-1]
    summary: dict = {
        "angles": [float(theta) for theta in suprema],
        "suprema": [float(value) for value in suprema.values()],
        "ritz_max_imag": ritz.max_imag,
    }
    stable = True
    if len(levels) > 1:
        drift = max(relative_change(levels[-2][theta], levels[-1][theta]) for theta in suprema)
        summary["refinement_drift"] = drift
        stable = drift <= REFINEMENT_STABILITY
        if not stable:
            warnings.append(
                Warning(code="REFINEMENT_DRIFT", message=f"suprema moved by {drift:.1%} under refinement")
            )
    flagged = sum(row[-1] != "ok" for table in tables for row in table.rows)
    if flagged:
        warnings.append(Warning(code="SCAN_FLAGS", message=f"{flagged} scan points were flagged"))
    summary["passed"] = stable and all(value == value for value in suprema.values())
    best = max(suprema.values())
    return Outcome(
        output=ExperimentOutput(experiment="resolvent-scan", tables=tables, summary=summary),
        reasoning=f"sup ‖λR(λ)‖ = {best:.4f} over {len(suprema)} rays and {len(radii)} radii",
        warnings=warnings,
    )


async def resolvent_scan(input: ResolventScanInput) -> CommandResult[ExperimentOutput]:
    """Scan the resolvent norm of μ − A over the configured rays."""
    return await run_experiment("resolvent-scan", _work, input)
