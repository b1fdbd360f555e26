"""flatcalc commands package.

Every experiment follows the same pattern:
1. A pydantic Input model built from the validated configuration
2. An async command that runs the numerics off the event loop
3. A CommandResult carrying CSV tables, a summary and warnings
"""

from collections.abc import Awaitable, Callable
from typing import Any, NamedTuple

from src.commands.calculus import (
    BipSweepInput,
    CalculusBoundInput,
    RieszInput,
    bip_sweep_command,
    calculus_bound,
    riesz,
)
from src.commands.common import ExperimentOutput
from src.commands.evolution import HeatMrInput, heat_mr
from src.commands.geometry import GeometryCheckInput, geometry_check
from src.commands.hardy import HardyInput, hardy
from src.commands.perturbation import PerturbationCurveInput, perturbation_curve
from src.commands.resolvent import ResolventScanInput, resolvent_scan
from src.core.config import REQUIRED_SECTIONS
from src.core.result import CommandResult
from src.core.types import ExperimentName


class Experiment(NamedTuple):
    """Registry entry: how to run an experiment and what it probes."""

    input_model: Any
    command: Callable[[Any], Awaitable[CommandResult[ExperimentOutput]]]
    required_fields: tuple[str, ...]
    probes: str
    anchor: str


EXPERIMENTS: dict[ExperimentName, Experiment] = {
    ExperimentName.GEOMETRY_CHECK: Experiment(
        GeometryCheckInput,
        geometry_check,
        ("boundary.name", "boundary.eps"),
        "pullback identities, distance equivalence and derivative blow-up near the boundary",
        "pullback distance comparability and blow-up of ∂^α h₂",
    ),
    ExperimentName.HARDY: Experiment(
        HardyInput,
        hardy,
        ("norm.p", "norm.gamma"),
        "weighted Hardy inequality on the half-line",
        "weighted Hardy inequality, constant p/|p−1−γ|",
    ),
    ExperimentName.RESOLVENT_SCAN: Experiment(
        ResolventScanInput,
        resolvent_scan,
        ("norm.p", "norm.gamma", "operator.bc"),
        "sectoriality: uniform resolvent bounds on rays of the sector",
        "sectoriality of μ − Δ^Ψ",
    ),
    ExperimentName.CALCULUS_BOUND: Experiment(
        CalculusBoundInput,
        calculus_bound,
        ("norm.p", "norm.gamma", "operator.bc", "contour.angle"),
        "bounded H-infinity calculus of the transformed Laplacian",
        "bounded H∞-calculus of μ − Δ^Ψ",
    ),
    ExperimentName.BIP_SWEEP: Experiment(
        BipSweepInput,
        bip_sweep_command,
        ("norm.p", "norm.gamma", "operator.bc", "contour.angle"),
        "bounded imaginary powers with sub-exponential growth",
        "bounded imaginary powers of μ − Δ^Ψ",
    ),
    ExperimentName.RIESZ: Experiment(
        RieszInput,
        riesz,
        ("norm.p", "norm.gamma"),
        "boundedness of the Riesz transform of the Dirichlet Laplacian",
        "Riesz transform ∇(−Δ_Dir)^{−1/2}",
    ),
    ExperimentName.HEAT_MR: Experiment(
        HeatMrInput,
        heat_mr,
        ("norm.p", "norm.gamma", "operator.bc", "time.q", "time.a"),
        "maximal L^q(v)-regularity of the heat equation with power weights in time",
        "maximal L^q(v)-regularity of ∂ₜ + μ − Δ^Ψ",
    ),
    ExperimentName.PERTURBATION_CURVE: Experiment(
        PerturbationCurveInput,
        perturbation_curve,
        ("boundary.name", "norm.p", "norm.gamma", "operator.bc"),
        "relative bounds of the boundary perturbation terms, linear in the amplitude",
        "relative bound ‖(Δ^Ψ − Δ)u‖ ≤ η‖(μ − Δ)u‖",
    ),
}


def list_experiments() -> str:
    """Deterministic text listing of every experiment."""
    lines = []
    for name, entry in EXPERIMENTS.items():
        sections = ", ".join(f"[{section}]" for section in REQUIRED_SECTIONS[name])
        lines.append(name.value)
        lines.append(f"  probes:   {entry.probes}")
        lines.append(f"  anchor:   {entry.anchor}")
        lines.append(f"  sections: [experiment], {sections}")
        lines.append(f"  fields:   experiment.name, {', '.join(entry.required_fields)}")
    return "\n".join(lines) + "\n"


__all__ = [
    "EXPERIMENTS",
    "Experiment",
    "ExperimentOutput",
    "list_experiments",
    # Experiment commands
    "geometry_check",
    "hardy",
    "resolvent_scan",
    "calculus_bound",
    "bip_sweep_command",
    "riesz",
    "heat_mr",
    "perturbation_curve",
]
