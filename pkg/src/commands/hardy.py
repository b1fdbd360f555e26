"""hardy: weighted Hardy inequality and Hardy embedding on ℝ₊."""

import math
from collections.abc import Callable

import numpy as np
from pydantic import BaseModel, Field

from src.commands.common import ExperimentOutput, Outcome, run_experiment
from src.core.config import ExperimentConfig
from src.core.output import Table
from src.core.result import CommandResult
from src.core.types import GridSpec, NormSpec
from src.numerics.spaces import (
    GridFunction,
    build_grid,
    hardy_check,
    hardy_constant,
    hardy_embedding_check,
)

HARDY_SLACK = 0.05

# Profiles vanishing at t = 0 (usable in both cases)
VANISHING: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "t*exp(-t)": lambda t: t * np.exp(-t),
    "t^2*exp(-t)": lambda t: t**2 * np.exp(-t),
    "sin(t)*exp(-t)": lambda t: np.sin(t) * np.exp(-t),
    "t/(1+t)^4": lambda t: t / (1.0 + t) ** 4,
}

# Profiles with a nonzero trace, only admissible when γ > p−1
NONVANISHING: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "exp(-t)": lambda t: np.exp(-t),
    "1/(1+t)^3": lambda t: 1.0 / (1.0 + t) ** 3,
}


class HardyInput(BaseModel):
    """Input for the hardy experiment."""

    norm: NormSpec = Field(..., description="p and γ of the inequality; k ≥ 1 adds the embedding")
    grid: GridSpec = Field(default_factory=GridSpec, description="Normal grid (d = 1)")

    @classmethod
    def from_config(cls, config: ExperimentConfig) -> "HardyInput":
        return cls(norm=config.norm, grid=config.grid)


def hardy_catalog(p: float, gamma: float) -> dict[str, Callable[[np.ndarray], np.ndarray]]:
    if gamma < p - 1:
        return dict(VANISHING)
    return {**VANISHING, **NONVANISHING}


def _work(input: HardyInput) -> Outcome:
    norm = input.norm
    grid = build_grid(input.grid.model_copy(update={"dim": 1}))
    x = grid.normal_nodes
    constant = hardy_constant(norm.p, norm.gamma)
    rows = []
    embedding_rows = []
    for label, profile in hardy_catalog(norm.p, norm.gamma).items():
        u = GridFunction(grid, profile(x))
        report = hardy_check(u, norm.p, norm.gamma)
        rows.append([label, norm.p, norm.gamma, report.case, report.lhs, report.rhs, report.ratio])
        if norm.k >= 1:
            lower, upper = hardy_embedding_check(u, norm)
            embedding_rows.append([label, norm.k, lower, upper, lower / upper])

    worst = max(row[-1] for row in rows)
    tables = [
        Table(name="hardy", header=["function", "p", "gamma", "case", "lhs", "rhs", "ratio"], rows=rows)
    ]
    if embedding_rows:
        tables.append(
            Table(
                name="hardy_embedding",
                header=["function", "k", "lower_norm", "norm", "ratio"],
                rows=embedding_rows,
            )
        )
    summary = {
        "constant": constant,
        "max_ratio": worst,
        "passed": bool(math.isfinite(worst) and worst <= constant + HARDY_SLACK),
    }
    return Outcome(
        output=ExperimentOutput(experiment="hardy", tables=tables, summary=summary),
        reasoning=(
            f"max Hardy ratio {worst:.4f} against constant p/|p−1−γ| = {constant:.4f} "
            f"over {len(rows)} profiles"
        ),
    )


async def hardy(input: HardyInput) -> CommandResult[ExperimentOutput]:
    """Evaluate the weighted Hardy inequality on the profile catalog."""
    return await run_experiment("hardy", _work, input)
