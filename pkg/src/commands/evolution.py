"""heat-mr: maximal L^q(v)-regularity ratios of the backward-Euler heat flow."""

import logging
from collections.abc import Callable

import numpy as np
from pydantic import BaseModel, Field

from src.commands.common import (
    ExperimentOutput,
    Outcome,
    build_operator,
    is_flat,
    map_units,
    operator_grid,
    relative_change,
    run_experiment,
    worker_pool,
)
from src.core.config import ExperimentConfig
from src.core.output import Table
from src.core.result import CommandResult, Warning
from src.core.types import BoundarySpec, GridSpec, NormSpec, OperatorSpec, SweepSpec, TimeGridSpec
from src.numerics.evolution import TimeGrid, max_reg_ratio
from src.numerics.spaces import HalfSpaceGrid

logger = logging.getLogger(__name__)

REFINEMENT_STABILITY = 0.15
CONTINUITY_SLOPE = 5.0

SpaceTimeProfile = Callable[[float, np.ndarray], np.ndarray]


def _lateral(y: np.ndarray) -> np.ndarray:
    return np.exp(-y[:, 1] ** 2) if y.shape[1] > 1 else np.ones(len(y))


FORCING_CATALOG: dict[str, SpaceTimeProfile] = {
    "constant": lambda t, y: y[:, 0] * np.exp(-y[:, 0]) * _lateral(y),
    "sine": lambda t, y: np.sin(np.pi * t) * y[:, 0] * np.exp(-y[:, 0]) * _lateral(y),
    "pulse": lambda t, y: np.exp(-4.0 * t) * np.exp(-y[:, 0]) * _lateral(y),
}


class HeatMrInput(BaseModel):
    """Input for the heat-mr experiment."""

    norm: NormSpec
    operator: OperatorSpec = Field(default_factory=OperatorSpec)
    grid: GridSpec = Field(default_factory=GridSpec)
    time: TimeGridSpec = Field(default_factory=TimeGridSpec)
    boundary: BoundarySpec | None = None
    sweep: SweepSpec = Field(default_factory=SweepSpec)
    seed: int = Field(default=0, ge=0)
    threads: int = Field(default=1, ge=1)

    @classmethod
    def from_config(cls, config: ExperimentConfig) -> "HeatMrInput":
        return cls(
            norm=config.norm,
            operator=config.operator,
            grid=config.grid,
            time=config.time,
            boundary=config.boundary,
            sweep=config.sweep,
            seed=config.run.seed,
            threads=config.run.threads,
        )


def forcing_on(grid: HalfSpaceGrid, tg: TimeGrid, profile: SpaceTimeProfile) -> np.ndarray:
    """Forcing values at t₁..t_N, shape (N, grid.size)."""
    y = grid.points()
    return np.array([profile(t, y) for t in tg.nodes[1:]], dtype=complex)


def catalog_ratio(input: HeatMrInput, grid: HalfSpaceGrid, tg: TimeGrid, eps: float) -> float:
    """Largest ratio over the forcing catalog for one boundary amplitude."""
    boundary = input.boundary.with_eps(eps) if input.boundary is not None else None
    A = build_operator(grid, input.operator, boundary, input.seed)
    ratios = [
        max_reg_ratio(A, forcing_on(grid, tg, profile), tg, input.norm)
        for profile in FORCING_CATALOG.values()
    ]
    logger.info("ε = %g: catalog ratios %s", eps, ratios)
    return max(ratios)


def _work(input: HeatMrInput) -> Outcome:
    curved = not is_flat(input.boundary)
    eps_values = [0.0] + [eps for eps in input.sweep.eps_values if eps > 0] if curved else [0.0]
    grid = operator_grid(input.grid, input.boundary)
    tg = TimeGrid.from_spec(input.time)
    with worker_pool(input.threads) as executor:
        ratios = map_units(executor, lambda eps: catalog_ratio(input, grid, tg, eps), eps_values)
    q, a, norm = input.time.q, input.time.a, input.norm
    rows = [[q, a, norm.gamma, norm.k, eps, ratio] for eps, ratio in zip(eps_values, ratios)]
    summary: dict = {"ratio": ratios[0]}
    warnings: list[Warning] = []
    passed = all(np.isfinite(ratios))

    if input.sweep.refinements > 0:
        refined = catalog_ratio(input, grid.refined(), tg.refined(), eps_values[0])
        drift = relative_change(ratios[0], refined)
        summary["refined_ratio"] = refined
        summary["refinement_drift"] = drift
        if drift > REFINEMENT_STABILITY:
            passed = False
            warnings.append(
                Warning(code="REFINEMENT_DRIFT", message=f"ratio moved by {drift:.1%} under refinement")
            )

    for eps, ratio in zip(eps_values[1:], ratios[1:]):
        if ratio > ratios[0] * (1 + CONTINUITY_SLOPE * eps):
            passed = False
            warnings.append(
                Warning(code="PERTURBATION_JUMP", message=f"ratio at ε={eps:g} exceeds the continuity bound")
            )
    summary["passed"] = passed
    return Outcome(
        output=ExperimentOutput(
            experiment="heat-mr",
            tables=[Table(name="heat_mr", header=["q", "a", "gamma", "k", "eps", "ratio"], rows=rows)],
            summary=summary,
        ),
        reasoning=f"maximal-regularity ratio {ratios[0]:.4f} at q={q:g}, a={a:g}",
        warnings=warnings,
    )


async def heat_mr(input: HeatMrInput) -> CommandResult[ExperimentOutput]:
    """Measure discrete maximal L^q(v)-regularity ratios over the forcing catalog."""
    return await run_experiment("heat-mr", _work, input)
