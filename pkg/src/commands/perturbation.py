"""perturbation-curve: relative bound η(ε) of B₁ + B₂ + B₃ against μ − Δ."""

import logging

import numpy as np
from pydantic import BaseModel, Field

from src.commands.common import (
    ExperimentOutput,
    Outcome,
    build_pullback,
    map_units,
    operator_grid,
    run_experiment,
    worker_pool,
)
from src.core.config import ExperimentConfig
from src.core.errors import ParameterError
from src.core.output import Table
from src.core.result import CommandResult, Warning
from src.core.types import (
    BoundaryCondition,
    BoundarySpec,
    GridSpec,
    NormSpec,
    OperatorLabel,
    OperatorSpec,
)
from src.numerics.operators import (
    assemble_laplacian,
    assemble_perturbations,
    perturbation_coefficients,
    perturbation_operator,
    perturbation_ratio,
)
from src.numerics.spaces import GridFunction, HalfSpaceGrid

logger = logging.getLogger(__name__)

DOUBLING_BAND = (1.5, 2.5)
HEADER = ["eps", "seminorm", "eta_b1", "eta_b2", "eta_b3", "eta", "c3_weighted_sup"]


class PerturbationCurveInput(BaseModel):
    """Input for the perturbation-curve experiment."""

    boundary: BoundarySpec
    norm: NormSpec
    operator: OperatorSpec = Field(default_factory=OperatorSpec)
    grid: GridSpec = Field(default_factory=GridSpec)
    eps_values: list[float] = Field(default_factory=lambda: [0.0125, 0.025, 0.05])
    seed: int = Field(default=0, ge=0)
    threads: int = Field(default=1, ge=1)

    @classmethod
    def from_config(cls, config: ExperimentConfig) -> "PerturbationCurveInput":
        return cls(
            boundary=config.boundary,
            norm=config.norm,
            operator=config.operator,
            grid=config.grid,
            eps_values=config.sweep.eps_values,
            seed=config.run.seed,
            threads=config.run.threads,
        )


def trial_functions(grid: HalfSpaceGrid, bc: BoundaryCondition) -> list[GridFunction]:
    """Smooth decaying profiles meeting the boundary condition at y₁ = 0.

    Neumann profiles are even in y₁ so the extrapolated normal trace
    vanishes to rounding on graded grids.
    """
    y = grid.points()
    y1 = y[:, 0]
    lateral = np.exp(-y[:, 1] ** 2) if grid.dim == 2 else 1.0
    if bc == BoundaryCondition.DIRICHLET:
        profiles = [y1 * np.exp(-y1), y1**2 * np.exp(-y1), np.sin(y1) * np.exp(-2 * y1)]
    else:
        profiles = [np.exp(-y1**2), (1 + y1**2) * np.exp(-y1**2), np.cos(y1) * np.exp(-y1**2 / 2)]
    return [GridFunction(grid, profile * lateral) for profile in profiles]


def _one_eps(input: PerturbationCurveInput, grid: HalfSpaceGrid, eps: float) -> list[float]:
    bc = input.operator.bc
    pullback = build_pullback(input.boundary.with_eps(eps), input.seed)
    coeffs = perturbation_coefficients(grid, pullback)
    A = assemble_laplacian(grid, bc).with_mu(input.operator.mu)
    trials = trial_functions(grid, bc)
    parts = assemble_perturbations(grid, coeffs, bc)
    etas = [
        perturbation_ratio(parts[label], A, trials, input.norm)
        for label in (OperatorLabel.B1, OperatorLabel.B2, OperatorLabel.B3)
    ]
    total = perturbation_ratio(perturbation_operator(grid, coeffs, bc), A, trials, input.norm)
    logger.info("ε = %g: η = %.4e", eps, total)
    return [eps, pullback.seminorm_cache, *etas, total, coeffs.c3_weighted_sup(pullback.graph.holder)]


def _work(input: PerturbationCurveInput) -> Outcome:
    if input.boundary.name == "zero":
        raise ParameterError("perturbation-curve needs a non-flat boundary (bump or cone_smoothed)")
    if input.operator.mu <= 0:
        raise ParameterError("perturbation-curve needs μ > 0")
    eps_values = sorted(eps for eps in input.eps_values if eps > 0)
    if not eps_values:
        raise ParameterError("eps_values must contain a positive amplitude")
    grid = operator_grid(input.grid, input.boundary)
    with worker_pool(input.threads) as executor:
        rows = map_units(executor, lambda eps: _one_eps(input, grid, eps), eps_values)

    eta = {row[0]: row[5] for row in rows}
    doubling = []
    for eps in eps_values:
        partner = next((other for other in eps_values if abs(other - 2 * eps) < 1e-12), None)
        if partner is not None and eta[eps] > 0:
            doubling.append(eta[partner] / eta[eps])
    lo, hi = DOUBLING_BAND
    passed = all(lo <= ratio <= hi for ratio in doubling)
    warnings = []
    if not passed:
        warnings.append(
            Warning(code="NONLINEAR_GROWTH", message=f"η(2ε)/η(ε) = {doubling} outside {DOUBLING_BAND}")
        )
    return Outcome(
        output=ExperimentOutput(
            experiment="perturbation-curve",
            tables=[Table(name="perturbation_curve", header=HEADER, rows=rows)],
            summary={"doubling_ratios": doubling, "max_eta": max(eta.values()), "passed": passed},
        ),
        reasoning=f"η over ε ∈ {eps_values}: {[f'{eta[e]:.3e}' for e in eps_values]}",
        warnings=warnings,
    )


async def perturbation_curve(input: PerturbationCurveInput) -> CommandResult[ExperimentOutput]:
    """Measure how the relative bound of Δ^Ψ − Δ scales with the boundary amplitude."""
    return await run_experiment("perturbation-curve", _work, input)
