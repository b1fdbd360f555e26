"""geometry-check: the pullback's identities, distance bands and blow-up slopes.

Failed checks are reported as warnings and in the checks table, and turn
the run into a CHECK_FAILED error (exit 3) that still carries the tables.
"""

import logging

import numpy as np
from pydantic import BaseModel, Field

from src.commands.common import ExperimentOutput, Outcome, build_pullback, run_experiment
from src.core.config import ExperimentConfig
from src.core.errors import ParameterError
from src.core.output import Table
from src.core.result import CommandResult, Warning
from src.core.seeding import make_generator
from src.core.types import BoundarySpec
from src.numerics.geometry import (
    psi,
    psi_inverse,
    sample_domain_points,
    solve_fixed_point,
    verify_blowup_bounds,
    verify_distance_equivalence,
    verify_inverse_distance_equivalence,
)

logger = logging.getLogger(__name__)

CONTRACTION_LIMIT = 0.6
LATTICE_STABILITY = 0.05


class GeometryCheckInput(BaseModel):
    """Input for the geometry-check experiment."""

    boundary: BoundarySpec = Field(..., description="Boundary catalog entry")
    samples: int = Field(default=1000, ge=10, description="Domain sample count")
    alpha: list[int] = Field(default_factory=lambda: [2, 0], description="Derivative multi-index")
    dyadic_depth: int = Field(default=8, ge=3, description="Dyadic levels y₁ = 2⁻ᵐ")
    seed: int = Field(default=0, ge=0)

    @classmethod
    def from_config(cls, config: ExperimentConfig) -> "GeometryCheckInput":
        return cls(
            boundary=config.boundary,
            samples=config.sweep.samples,
            alpha=config.sweep.alpha,
            dyadic_depth=config.sweep.dyadic_depth,
            seed=config.run.seed,
        )


def _check(rows: list[list], name: str, value: float, threshold: float, passed: bool) -> None:
    rows.append([name, float(value), float(threshold), bool(passed)])


def _work(input: GeometryCheckInput) -> Outcome:
    if len(input.alpha) != input.boundary.dim:
        raise ParameterError(
            f"alpha has {len(input.alpha)} entries, the domain has dimension {input.boundary.dim}"
        )
    pullback = build_pullback(input.boundary, input.seed)
    graph = pullback.graph
    rng = make_generator(input.seed)
    rows: list[list] = []

    points = sample_domain_points(pullback, input.samples, rng)
    fixed = solve_fixed_point(pullback, points)
    _check(rows, "fixed_point_residual", fixed.residual, pullback.fp_tol, fixed.residual <= pullback.fp_tol)
    _check(
        rows,
        "picard_contraction",
        fixed.max_contraction,
        CONTRACTION_LIMIT,
        fixed.max_contraction <= CONTRACTION_LIMIT,
    )

    round_trip = float(np.max(np.abs(psi_inverse(pullback, psi(pullback, points)) - points)))
    limit = 10 * pullback.fp_tol * max(1.0, float(np.max(np.abs(points))))
    _check(rows, "round_trip", round_trip, limit, round_trip <= limit)

    if input.boundary.name == "zero" or input.boundary.eps == 0.0:
        identity = float(np.max(np.abs(fixed.rho - points[:, 0])))
        _check(rows, "identity_rho", identity, 1e-12, identity <= 1e-12)

    band = verify_distance_equivalence(pullback, points)
    fine = verify_distance_equivalence(pullback, points, spacing=graph.support_radius / 4000)
    drift = max(
        abs(fine.min_ratio - band.min_ratio) / band.min_ratio,
        abs(fine.max_ratio - band.max_ratio) / band.max_ratio,
    )
    _check(rows, "distance_ratio_min", band.min_ratio, 0.0, band.min_ratio > 0)
    _check(rows, "distance_ratio_max", band.max_ratio, np.inf, np.isfinite(band.max_ratio))
    _check(rows, "distance_lattice_drift", drift, LATTICE_STABILITY, drift <= LATTICE_STABILITY)

    half_space = np.column_stack(
        [
            10.0 ** rng.uniform(-4.0, 0.0, size=input.samples),
            rng.uniform(-1.5, 1.5, size=(input.samples, graph.lateral_dim)) * graph.support_radius,
        ]
    )
    inverse = verify_inverse_distance_equivalence(pullback, half_space)
    _check(rows, "inverse_ratio_min", inverse.min_ratio, 0.0, inverse.min_ratio > 0)
    _check(rows, "inverse_ratio_max", inverse.max_ratio, np.inf, np.isfinite(inverse.max_ratio))

    tables = []
    summary: dict = {
        "seminorm": pullback.seminorm_cache,
        "L": pullback.L,
        "distance_band": [band.min_ratio, band.max_ratio],
        "inverse_band": [inverse.min_ratio, inverse.max_ratio],
    }
    warnings: list[Warning] = []
    if pullback.seminorm_cache <= 1.0:
        report = verify_blowup_bounds(
            pullback, tuple(input.alpha), graph.smoothness, graph.holder, input.dyadic_depth
        )
        _check(rows, "blowup_slope", report.slope, report.bound, report.slope >= report.bound)
        if report.h1_slope is not None:
            _check(rows, "blowup_slope_h1", report.h1_slope, report.bound, report.h1_slope >= report.bound)
        h1 = report.h1_values or [float("nan")] * len(report.y1)
        tables.append(
            Table(
                name="blowup",
                header=["y1", "h2_value", "h1_value"],
                rows=[list(row) for row in zip(report.y1, report.h2_values, h1)],
            )
        )
        summary["blowup_status"] = report.status
        summary["blowup_slope"] = report.slope
    else:
        message = f"seminorm {pullback.seminorm_cache:.3f} > 1, blow-up bounds not checked"
        logger.warning("%s", message)
        warnings.append(Warning(code="BLOWUP_SKIPPED", message=message))

    failed = [row[0] for row in rows if not row[3]]
    for name in failed:
        warnings.append(Warning(code="CHECK_FAILED", message=f"geometry check '{name}' failed"))
    summary["passed"] = not failed
    tables.insert(0, Table(name="geometry_checks", header=["check", "value", "threshold", "passed"], rows=rows))
    reasoning = (
        f"{len(rows) - len(failed)}/{len(rows)} checks passed for the "
        f"{input.boundary.name} boundary (ε={input.boundary.eps:g})"
    )
    return Outcome(
        output=ExperimentOutput(experiment="geometry-check", tables=tables, summary=summary),
        reasoning=reasoning,
        warnings=warnings,
        failed_checks=failed,
    )


async def geometry_check(input: GeometryCheckInput) -> CommandResult[ExperimentOutput]:
    """Verify the pullback construction on a catalog boundary."""
    return await run_experiment("geometry-check", _work, input)
