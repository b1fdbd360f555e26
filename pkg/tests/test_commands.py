"""Tests for the experiment commands."""

import math
from pathlib import Path

import pytest

import src.commands.geometry as geometry_module
from src.commands import (
    EXPERIMENTS,
    bip_sweep_command,
    calculus_bound,
    geometry_check,
    hardy,
    heat_mr,
    list_experiments,
    perturbation_curve,
    resolvent_scan,
    riesz,
)
from src.commands.calculus import BipSweepInput, CalculusBoundInput, RieszInput
from src.commands.evolution import HeatMrInput
from src.commands.geometry import GeometryCheckInput
from src.commands.hardy import HardyInput
from src.commands.perturbation import PerturbationCurveInput
from src.commands.resolvent import ResolventScanInput
from src.core.config import load_config, parse_config
from src.core.errors import ErrorCode
from src.core.types import (
    BoundaryCondition,
    BoundarySpec,
    ContourSpec,
    ExperimentName,
    GridSpec,
    NormSpec,
    OperatorSpec,
    SweepSpec,
    TimeGridSpec,
)

L2 = NormSpec(k=0, p=2, gamma=0.0)
FINE_1D = GridSpec(dim=1, x_max=40.0, x1_min=1e-4, max_width=0.02)
COARSE_1D = GridSpec(dim=1, x_max=5.0, x1_min=0.1, max_width=0.1)
CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def table_names(result) -> list[str]:
    return [table.name for table in result.data.tables]


def shipped_input(name: ExperimentName):
    """The experiment input built from its configs/<name>.ini."""
    config = load_config(CONFIG_DIR / f"{name.value}.ini")
    return EXPERIMENTS[name].input_model.from_config(config)


# =============================================================================
# Registry
# =============================================================================


def test_every_experiment_is_registered():
    """Each experiment name should have a registry entry."""
    assert set(EXPERIMENTS) == set(ExperimentName)


def test_list_experiments_is_deterministic():
    """The listing should be identical between calls and name every experiment."""
    listing = list_experiments()
    assert listing == list_experiments()
    for name in ExperimentName:
        assert f"{name.value}\n  probes:" in listing
    assert listing.endswith("\n")


def test_every_experiment_names_its_result():
    """Each registry entry should carry the statement it checks numerically."""
    listing = list_experiments()
    for entry in EXPERIMENTS.values():
        assert entry.anchor.strip()
        assert f"  anchor:   {entry.anchor}\n" in listing


def test_input_from_config():
    """Input models should pick their fields out of a parsed config."""
    config = parse_config("[experiment]\nname = hardy\n\n[norm]\nk = 1\np = 3\ngamma = 0.5\n")
    model = HardyInput.from_config(config)
    assert model.norm.k == 1
    assert model.norm.p == 3.0
    assert model.grid == config.grid


# =============================================================================
# hardy
# =============================================================================


@pytest.mark.asyncio
async def test_hardy_passes_for_unweighted_case():
    """hardy should stay below the sharp constant p/|p−1−γ| = 2."""
    result = await hardy(HardyInput(norm=L2, grid=FINE_1D))

    assert result.success is True
    assert table_names(result) == ["hardy"]
    assert result.data.summary["constant"] == pytest.approx(2.0)
    assert result.data.summary["passed"] is True
    assert all(row[3] == "i" for row in result.data.tables[0].rows)


@pytest.mark.asyncio
async def test_hardy_adds_embedding_table_for_positive_order():
    """hardy with k ≥ 1 should also report the Hardy embedding."""
    norm = NormSpec(k=1, p=2, gamma=0.0)
    result = await hardy(HardyInput(norm=norm, grid=FINE_1D))

    assert result.success is True
    assert table_names(result) == ["hardy", "hardy_embedding"]
    embedding = result.data.tables[1]
    assert len(embedding.rows) == len(result.data.tables[0].rows)


@pytest.mark.asyncio
async def test_hardy_case_ii_includes_nonvanishing_profiles():
    """γ > p−1 admits profiles with a nonzero trace."""
    result = await hardy(HardyInput(norm=NormSpec(k=0, p=2, gamma=1.5), grid=FINE_1D))

    assert result.success is True
    rows = result.data.tables[0].rows
    assert "exp(-t)" in [row[0] for row in rows]
    assert all(row[3] == "ii" for row in rows)


# =============================================================================
# geometry-check
# =============================================================================


@pytest.mark.asyncio
async def test_geometry_check_on_flat_boundary():
    """A flat boundary should pass every check and report the blow-up table."""
    result = await geometry_check(GeometryCheckInput(boundary=BoundarySpec(), samples=50))

    assert result.success is True
    assert table_names(result) == ["geometry_checks", "blowup"]
    assert result.data.summary["passed"] is True
    assert result.data.summary["blowup_status"] == "flat-zero"


@pytest.mark.asyncio
async def test_geometry_check_skips_blowup_for_large_seminorm():
    """A boundary with seminorm above 1 should skip the blow-up bounds with a warning."""
    boundary = BoundarySpec(name="bump", eps=0.1)
    result = await geometry_check(GeometryCheckInput(boundary=boundary, samples=50))

    assert table_names(result) == ["geometry_checks"]
    assert "BLOWUP_SKIPPED" in [w.code for w in result.warnings]


@pytest.mark.asyncio
async def test_geometry_check_failure_exits_3(monkeypatch):
    """A failed check should fail the run with exit 3 and keep the tables."""
    monkeypatch.setattr(geometry_module, "LATTICE_STABILITY", -1.0)
    result = await geometry_check(GeometryCheckInput(boundary=BoundarySpec(), samples=50))

    assert result.success is False
    assert result.error.code == ErrorCode.CHECK_FAILED.value
    assert result.exit_code == 3
    assert "distance_lattice_drift" in result.error.message
    assert result.data.summary["passed"] is False
    assert table_names(result) == ["geometry_checks", "blowup"]


@pytest.mark.asyncio
async def test_geometry_check_rejects_wrong_multi_index():
    """alpha must have one entry per coordinate."""
    result = await geometry_check(GeometryCheckInput(boundary=BoundarySpec(), alpha=[1, 0, 0]))

    assert result.success is False
    assert result.error.code == ErrorCode.VALIDATION_ERROR.value
    assert result.exit_code == 2


# =============================================================================
# resolvent-scan
# =============================================================================


@pytest.mark.asyncio
async def test_resolvent_scan_flat_laplacian():
    """The flat Dirichlet Laplacian should give bounded suprema on every ray."""
    sweep = SweepSpec(angles=[math.pi / 2, math.pi], radii_count=3, refinements=1)
    result = await resolvent_scan(ResolventScanInput(norm=L2, grid=COARSE_1D, sweep=sweep))

    assert result.success is True
    assert table_names(result) == ["resolvent_scan", "resolvent_scan_refined_1"]
    assert len(result.data.tables[0].rows) == 6
    assert max(result.data.summary["suprema"]) <= 1.0 + 1e-3
    assert "refinement_drift" in result.data.summary


@pytest.mark.asyncio
async def test_resolvent_scan_rejects_unshifted_neumann():
    """Neumann operators need μ > 0."""
    operator = OperatorSpec(bc=BoundaryCondition.NEUMANN, mu=0.0)
    result = await resolvent_scan(ResolventScanInput(norm=L2, operator=operator, grid=COARSE_1D))

    assert result.success is False
    assert result.error.code == ErrorCode.PARAMETER_OUT_OF_RANGE.value


# =============================================================================
# calculus-bound / bip-sweep / riesz
# =============================================================================


@pytest.mark.asyncio
async def test_calculus_bound_flat_laplacian():
    """Self-adjoint operators should have an H∞ constant close to 1."""
    contour = ContourSpec(r_min=1e-6, r_max=1e8, nodes_per_decade=12)
    result = await calculus_bound(
        CalculusBoundInput(norm=L2, grid=COARSE_1D, contour=contour, probes=2)
    )

    assert result.success is True
    assert table_names(result) == ["calculus_bound"]
    assert result.data.summary["constant"] <= 1.05
    assert result.data.summary["passed"] is True


@pytest.mark.asyncio
async def test_bip_sweep_flat_laplacian():
    """Imaginary powers of a self-adjoint operator should not grow."""
    sweep = SweepSpec(s_values=[-1.0, 0.0, 1.0])
    result = await bip_sweep_command(BipSweepInput(norm=L2, grid=COARSE_1D, sweep=sweep, probes=2))

    assert result.success is True
    assert table_names(result) == ["bip_sweep"]
    assert [row[0] for row in result.data.tables[0].rows] == [-1.0, 0.0, 1.0]
    assert result.data.summary["passed"] is True


@pytest.mark.asyncio
async def test_riesz_with_refinement():
    """riesz should report one row per refinement level."""
    result = await riesz(RieszInput(norm=L2, grid=COARSE_1D, refinements=1, probes=2))

    assert result.success is True
    rows = result.data.tables[0].rows
    assert [row[0] for row in rows] == [0, 1]
    assert rows[1][1] == 2 * rows[0][1]
    assert 0 < result.data.summary["norm"] < math.inf


# =============================================================================
# heat-mr
# =============================================================================


@pytest.mark.asyncio
async def test_heat_mr_flat_laplacian():
    """Self-adjoint μ − Δ should give a ratio between 1 and 2 in L²(0, T; L²)."""
    grid = GridSpec(dim=1, x_max=5.0, x1_min=0.25, max_width=0.25)
    result = await heat_mr(
        HeatMrInput(
            norm=L2,
            grid=grid,
            time=TimeGridSpec(steps=16),
            sweep=SweepSpec(refinements=1),
        )
    )

    assert result.success is True
    assert table_names(result) == ["heat_mr"]
    assert len(result.data.tables[0].rows) == 1
    ratio = result.data.summary["ratio"]
    assert 1.0 - 1e-9 <= ratio <= 2.0 + 1e-9
    assert "refined_ratio" in result.data.summary


# =============================================================================
# perturbation-curve
# =============================================================================


@pytest.mark.asyncio
async def test_perturbation_curve_rejects_flat_boundary():
    """perturbation-curve needs a curved boundary."""
    result = await perturbation_curve(PerturbationCurveInput(boundary=BoundarySpec(), norm=L2))

    assert result.success is False
    assert result.error.code == ErrorCode.VALIDATION_ERROR.value
    assert result.exit_code == 2


@pytest.mark.asyncio
async def test_perturbation_curve_rejects_zero_shift():
    """perturbation-curve needs μ > 0."""
    result = await perturbation_curve(
        PerturbationCurveInput(
            boundary=BoundarySpec(name="bump", eps=0.05),
            norm=L2,
            operator=OperatorSpec(mu=0.0),
        )
    )

    assert result.success is False
    assert result.error.code == ErrorCode.VALIDATION_ERROR.value


@pytest.mark.asyncio
async def test_perturbation_curve_is_linear_in_amplitude():
    """Doubling the bump amplitude should roughly double the relative bound."""
    result = await perturbation_curve(shipped_input(ExperimentName.PERTURBATION_CURVE))

    assert result.success is True
    ratios = result.data.summary["doubling_ratios"]
    assert len(ratios) == 2
    assert all(1.5 <= ratio <= 2.5 for ratio in ratios)
    assert result.data.summary["passed"] is True


# =============================================================================
# Curved boundaries
# =============================================================================


@pytest.mark.asyncio
async def test_resolvent_scan_on_bump_is_refinement_stable():
    """Suprema of ‖λR(λ)‖ for μ − Δ^Ψ should move by at most 20% under refinement."""
    result = await resolvent_scan(shipped_input(ExperimentName.RESOLVENT_SCAN))

    assert result.success is True
    assert table_names(result) == ["resolvent_scan", "resolvent_scan_refined_1"]
    assert all(math.isfinite(value) for value in result.data.summary["suprema"])
    assert result.data.summary["refinement_drift"] <= 0.2
    assert result.data.summary["passed"] is True


@pytest.mark.asyncio
async def test_calculus_bound_on_bump_stays_near_flat():
    """The H∞ constant on the ε = 0.05 bump should be within 2× of the flat one."""
    result = await calculus_bound(shipped_input(ExperimentName.CALCULUS_BOUND))

    assert result.success is True
    assert table_names(result) == ["calculus_bound", "calculus_bound_flat"]
    assert 0 < result.data.summary["ratio_to_flat"] <= 2.0
    assert result.data.summary["passed"] is True


@pytest.mark.asyncio
async def test_bip_sweep_on_bump_grows_subexponentially():
    """log‖A^{is}‖ over |s| ≤ 5 on the ε = 0.05 bump should have slope at most 0.2."""
    result = await bip_sweep_command(shipped_input(ExperimentName.BIP_SWEEP))

    assert result.success is True
    assert len(result.data.tables[0].rows) == 11
    assert result.data.summary["slope"] <= 0.2
    assert result.data.summary["passed"] is True


@pytest.mark.asyncio
async def test_riesz_is_refinement_stable_for_large_weight():
    """At γ = 2.5 the Riesz norm should stay finite and move by at most 25%."""
    input = shipped_input(ExperimentName.RIESZ).model_copy(
        update={"norm": NormSpec(k=0, p=2, gamma=2.5)}
    )
    result = await riesz(input)

    assert result.success is True
    assert math.isfinite(result.data.summary["norm"])
    assert result.data.summary["refinement_drift"] <= 0.25
    assert result.data.summary["passed"] is True
