"""Tests for discrete Laplacians, pullback perturbations and resolvents."""

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
import scipy.sparse as sp

from src.core.errors import ParameterError, TraceViolationError
from src.core.types import BoundaryCondition, GridSpec, NormSpec, OperatorLabel
from src.numerics.operators import (
    DiscreteOperator,
    GramNorm,
    assemble_laplacian,
    assemble_perturbations,
    assemble_pullback_laplacian,
    elliptic_regularity_ratio,
    export_coo,
    normal_laplacian,
    operator_norm,
    perturbation_coefficients,
    perturbation_ratio,
    resolvent_solve,
    ritz_values,
    sectoriality_scan,
)
from src.numerics.spaces import GridFunction, build_grid

DIR = BoundaryCondition.DIRICHLET
NEU = BoundaryCondition.NEUMANN
L2 = NormSpec(k=0, p=2, gamma=0.0)


def uniform_grid(width: float, x_max: float = 40.0):
    return build_grid(GridSpec(dim=1, x_max=x_max, x1_min=width, max_width=width))


def node_profile(grid, fn) -> GridFunction:
    return GridFunction.from_callable(grid, lambda y: fn(y[:, 0]))


# =============================================================================
# Assembly
# =============================================================================


@pytest.mark.parametrize("bc", [DIR, NEU])
def test_normal_laplacian_is_symmetric_in_width_inner_product(fine_grid_1d, bc):
    M = normal_laplacian(fine_grid_1d, bc)
    S = (sp.diags(fine_grid_1d.normal_widths) @ M).toarray()
    assert np.allclose(S, S.T, atol=1e-9 * np.abs(S).max())


def test_neumann_laplacian_annihilates_constants(coarse_grid_1d):
    M = normal_laplacian(coarse_grid_1d, NEU)
    assert np.allclose(M @ np.ones(coarse_grid_1d.n1), 0.0, atol=1e-10)


def test_shifted_operator(dirichlet_1d):
    shifted = dirichlet_1d.shifted().toarray()
    expected = np.eye(dirichlet_1d.size) - dirichlet_1d.matrix.toarray()
    assert np.allclose(shifted, expected)


def test_with_mu_rejects_negative_shift(dirichlet_1d):
    with pytest.raises(ParameterError):
        dirichlet_1d.with_mu(-1.0)


def test_discrete_operator_rejects_shape_mismatch(coarse_grid_1d):
    with pytest.raises(ParameterError):
        DiscreteOperator(
            grid=coarse_grid_1d,
            matrix=sp.identity(3),
            bc=DIR,
            label=OperatorLabel.LAPLACIAN,
        )


def test_flat_pullback_laplacian_is_laplacian(zero_pullback, grid_2d):
    """h ≡ 0 gives Δ^Ψ = Δ entry for entry."""
    for bc in (DIR, NEU):
        pulled, coeffs = assemble_pullback_laplacian(grid_2d, zero_pullback, bc)
        plain = assemble_laplacian(grid_2d, bc)
        assert abs(pulled.matrix - plain.matrix).max() <= 1e-12
        assert pulled.label == OperatorLabel.PULLBACK_LAPLACIAN


def test_flat_perturbation_coefficients_vanish(zero_pullback, grid_2d):
    coeffs = perturbation_coefficients(grid_2d, zero_pullback)
    assert np.allclose(coeffs.c1, 0.0, atol=1e-14)
    assert np.allclose(coeffs.c2, 0.0, atol=1e-14)
    assert np.allclose(coeffs.c3, 0.0, atol=1e-14)


def test_bump_perturbation_coefficients(small_bump_pullback, grid_2d):
    coeffs = perturbation_coefficients(grid_2d, small_bump_pullback)
    assert np.all(coeffs.c1 >= 0)
    assert np.allclose(coeffs.c1, np.sum(coeffs.c2**2, axis=1))
    assert coeffs.c1.max() > 0
    assert math.isfinite(coeffs.c3_weighted_sup(1.0))


def test_perturbation_coefficients_scale_with_amplitude(
    half_bump_pullback, small_bump_pullback, grid_2d
):
    """c2 and c3 double with ε to first order; c1 = |c2|² quadruples."""
    half = perturbation_coefficients(grid_2d, half_bump_pullback)
    full = perturbation_coefficients(grid_2d, small_bump_pullback)
    for name, factor, tol in (("c2", 2.0, 0.05), ("c3", 2.0, 0.05), ("c1", 4.0, 0.1)):
        scaled = factor * getattr(half, name)
        gap = np.max(np.abs(getattr(full, name) - scaled))
        assert gap <= tol * np.max(np.abs(scaled)), name


def test_perturbation_parts_sum_to_pullback_laplacian(small_bump_pullback, grid_2d):
    pulled, coeffs = assemble_pullback_laplacian(grid_2d, small_bump_pullback, DIR)
    parts = assemble_perturbations(grid_2d, coeffs, DIR)
    total = assemble_laplacian(grid_2d, DIR).matrix + sum(op.matrix for op in parts.values())
    assert abs(total - pulled.matrix).max() <= 1e-10


def test_perturbation_coefficients_reject_dimension_mismatch(zero_pullback, coarse_grid_1d):
    with pytest.raises(ParameterError):
        perturbation_coefficients(coarse_grid_1d, zero_pullback)


def test_export_coo(dirichlet_1d, tmp_path):
    path = export_coo(dirichlet_1d, tmp_path / "A.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "row,col,re,im"
    assert len(lines) == 1 + dirichlet_1d.matrix.nnz


# =============================================================================
# Resolvents
# =============================================================================


def resolvent_error(width: float, bc: BoundaryCondition) -> float:
    """Max nodal error of (−1 − Δ)u = f against a closed-form u."""
    grid = uniform_grid(width)
    if bc == DIR:
        exact, rhs = (lambda t: t * np.exp(-t)), (lambda t: 2 * (1 - t) * np.exp(-t))
    else:
        exact, rhs = (lambda t: (t + 1) * np.exp(-t)), (lambda t: -2 * t * np.exp(-t))
    A = assemble_laplacian(grid, bc)
    u = resolvent_solve(A, -1.0, node_profile(grid, rhs))
    return float(np.max(np.abs(u.flat - exact(grid.normal_nodes))))


@pytest.mark.parametrize("bc", [DIR, NEU])
def test_resolvent_converges_at_second_order(bc):
    errors = [resolvent_error(width, bc) for width in (0.2, 0.1, 0.05)]
    for coarse, fine in zip(errors, errors[1:]):
        assert 3.4 <= coarse / fine <= 4.6


def test_neumann_resolvent_on_graded_grid():
    """(1 − ∂²)u = e^{−t}, u'(0) = 0 gives u = (t + 1)e^{−t}/2 on cells down to 1e-4."""
    grid = build_grid(GridSpec(dim=1))
    f = node_profile(grid, lambda t: np.exp(-t))
    u = resolvent_solve(assemble_laplacian(grid, NEU), 1.0, f)
    t = grid.normal_nodes
    assert np.max(np.abs(u.flat - (t + 1) * np.exp(-t) / 2)) < 1e-2


def test_resolvent_solve_satisfies_system(dirichlet_1d, probe):
    lam = 2.0 + 3.0j
    u = resolvent_solve(dirichlet_1d, lam, probe)
    residual = lam * u.flat - dirichlet_1d.matrix @ u.flat - probe.flat
    assert np.linalg.norm(residual) <= 1e-9 * np.linalg.norm(probe.flat)


def test_elliptic_regularity_ratio():
    """u = te^{−t}: ‖u‖²_{W^{2,2}} = 7/4 against ‖f‖² = 1."""
    grid = uniform_grid(0.05)
    A = assemble_laplacian(grid, DIR)
    f = node_profile(grid, lambda t: 2 * (1 - t) * np.exp(-t))
    ratio = elliptic_regularity_ratio(A, -1.0, f, L2)
    assert ratio == pytest.approx(math.sqrt(7 / 4), rel=2e-2)


def test_elliptic_regularity_ratio_of_zero_forcing(dirichlet_1d, coarse_grid_1d):
    assert elliptic_regularity_ratio(dirichlet_1d, -1.0, GridFunction.zeros(coarse_grid_1d), L2) == 0.0


# =============================================================================
# Norms and sectoriality
# =============================================================================


def test_gram_norm_matches_weighted_l2(coarse_grid_1d, probe):
    gram = GramNorm(coarse_grid_1d, L2)
    expected = math.sqrt(float(np.sum(coarse_grid_1d.measure(0.0) * np.abs(probe.flat) ** 2)))
    assert gram.norm(probe.flat) == pytest.approx(expected)


def test_operator_norm_of_diagonal_scaling(coarse_grid_1d):
    scale = np.linspace(0.5, 3.0, coarse_grid_1d.size)
    estimate = operator_norm(
        lambda x: scale * x,
        lambda x: scale * x,
        coarse_grid_1d,
        L2,
        np.random.default_rng(0),
        max_iter=200,
        tol=1e-8,
    )
    assert estimate.value <= 3.0 + 1e-12
    assert estimate.value >= 2.9


def smallest_eigenvalue(A: DiscreteOperator) -> float:
    return float(np.min(np.linalg.eigvals(A.shifted().toarray()).real))


def test_sectoriality_on_negative_axis(dirichlet_1d):
    """Self-adjoint P: ‖λR(λ, P)‖ = r/(r + m) at λ = −r."""
    radii = [0.01, 1.0, 100.0]
    scan = sectoriality_scan(dirichlet_1d, 1.0, [math.pi], radii, L2)
    m = smallest_eigenvalue(dirichlet_1d)
    for row in scan.rows:
        exact = row.r / (row.r + m)
        assert row.norm_estimate <= exact + 1e-9
        assert row.norm_estimate >= 0.9 * exact


def test_sectoriality_on_imaginary_axis(dirichlet_1d):
    scan = sectoriality_scan(dirichlet_1d, 1.0, [math.pi / 2], [0.1, 10.0, 1e3], L2)
    assert scan.suprema[math.pi / 2] <= 1.0 + 1e-3


def test_sectoriality_scan_independent_of_threads(dirichlet_1d):
    angles, radii = [math.pi / 2, 3 * math.pi / 4], [0.1, 1.0, 10.0]
    serial = sectoriality_scan(dirichlet_1d, 1.0, angles, radii, L2, seed=4)
    with ThreadPoolExecutor(max_workers=3) as pool:
        threaded = sectoriality_scan(dirichlet_1d, 1.0, angles, radii, L2, seed=4, executor=pool)
    assert serial.rows == threaded.rows


def test_sectoriality_scan_rejects_bad_input(dirichlet_1d):
    with pytest.raises(ParameterError):
        sectoriality_scan(dirichlet_1d, 0.0, [math.pi / 2], [1.0], L2)
    with pytest.raises(ParameterError):
        sectoriality_scan(dirichlet_1d, 1.0, [4.0], [1.0], L2)


def test_ritz_values_are_real_for_flat_laplacian(dirichlet_1d):
    report = ritz_values(dirichlet_1d, steps=30)
    assert report.max_imag <= 1e-6
    assert report.values.real.min() >= smallest_eigenvalue(dirichlet_1d) - 1e-8


# =============================================================================
# Perturbation bounds
# =============================================================================


def test_perturbation_ratio_rejects_trace_violation(dirichlet_1d, coarse_grid_1d):
    trial = node_profile(coarse_grid_1d, lambda t: np.exp(-t))
    with pytest.raises(TraceViolationError):
        perturbation_ratio(dirichlet_1d, dirichlet_1d, [trial], L2)


def test_perturbation_ratio_of_operator_against_itself(dirichlet_1d, coarse_grid_1d):
    """B = μ − Δ against μ − Δ gives η = 1 up to the identity part."""
    shifted = DiscreteOperator(
        grid=coarse_grid_1d,
        matrix=dirichlet_1d.shifted(),
        bc=DIR,
        label=OperatorLabel.PERTURBATION,
    )
    trial = node_profile(coarse_grid_1d, lambda t: t * (5.0 - t))
    assert perturbation_ratio(shifted, dirichlet_1d, [trial], L2) == pytest.approx(1.0)


def test_flat_perturbation_ratio_vanishes(zero_pullback, grid_2d):
    coeffs = perturbation_coefficients(grid_2d, zero_pullback)
    parts = assemble_perturbations(grid_2d, coeffs, DIR)
    A = assemble_laplacian(grid_2d, DIR).with_mu(1.0)
    y = grid_2d.points()
    trial = GridFunction(grid_2d, y[:, 0] ** 2 * np.exp(-y[:, 0]) * np.exp(-y[:, 1] ** 2))
    for op in parts.values():
        assert perturbation_ratio(op, A, [trial], L2) == 0.0
