"""Tests for the mollifiers, h₂ and the regularized-distance pullback."""

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq

from src.core.errors import BoundaryFloorError, DomainError, ParameterError
from src.numerics.geometry import (
    boundary_distance,
    h2_deriv,
    h2_eval,
    psi,
    psi_inverse,
    regularized_distance,
    rho_gradient,
    rho_hessian,
    rho_jet,
    sample_domain_points,
    solve_fixed_point,
    verify_blowup_bounds,
    verify_distance_equivalence,
    verify_inverse_distance_equivalence,
)
from src.numerics.mollifier import MollifierSpec

# =============================================================================
# Mollifiers
# =============================================================================


@pytest.mark.parametrize("dim", [2, 3])
def test_mollifier_masses_are_one(dim):
    mol = MollifierSpec(dim=dim)
    assert mol.eta_mass() == pytest.approx(1.0, abs=1e-10)
    assert mol.phi_mass() == pytest.approx(1.0, abs=1e-10)


def test_eta_is_even():
    mol = MollifierSpec(dim=2)
    t = np.linspace(-0.8, 0.8, 41)
    assert np.array_equal(mol.eta(t), mol.eta(-t))


@pytest.mark.parametrize("dim", [2, 3])
def test_product_mollifier_fits_unit_ball(dim):
    mol = MollifierSpec(dim=dim)
    m = dim - 1
    assert mol.eta_half_width**2 + m * mol.phi_half_width**2 <= 1.0 + 1e-12


def test_mollifier_vanishes_outside_support():
    mol = MollifierSpec(dim=2)
    assert mol.eta(np.array([0.75]))[0] == 0.0
    assert mol.phi(np.array([[0.75]]))[0] == 0.0


# =============================================================================
# h₂
# =============================================================================


def test_h2_at_zero_scale_reproduces_boundary(bump_pullback):
    for x in (0.0, 0.4, 0.9):
        expected = float(bump_pullback.graph.eval(np.array([[x]]))[0])
        assert h2_eval(bump_pullback, 0.0, [x]) == pytest.approx(expected, abs=1e-12)


def test_h2_of_zero_boundary_vanishes(zero_pullback):
    assert h2_eval(zero_pullback, 0.7, [0.2]) == 0.0


def test_h2_matches_adaptive_quadrature(bump_pullback):
    """h₂(τ, 0) = ∫ h(−(τ/L)z) ϕ(z) dz."""
    pb = bump_pullback
    tau = 0.5
    half = pb.mollifier.phi_half_width

    def integrand(z: float) -> float:
        return float(pb.graph.eval(np.array([-(tau / pb.L) * z]))) * float(pb.mollifier.phi(np.array([z])))

    expected, _ = quad(integrand, -half, half, epsabs=1e-13, epsrel=1e-12, limit=200)
    assert h2_eval(pb, tau, [0.0]) == pytest.approx(expected, abs=1e-7)


def test_h2_normal_derivative_matches_finite_difference(bump_pullback):
    step = 1e-5
    forward = h2_eval(bump_pullback, 1.0 + step, [0.3])
    backward = h2_eval(bump_pullback, 1.0 - step, [0.3])
    fd = (forward - backward) / (2 * step)
    assert h2_deriv(bump_pullback, (1, 0), [1.0, 0.3]) == pytest.approx(fd, abs=1e-7)


def test_h2_deriv_rejects_boundary_points(bump_pullback):
    with pytest.raises(DomainError):
        h2_deriv(bump_pullback, (1, 0), [0.0, 0.3])


def test_h2_deriv_rejects_wrong_multi_index(bump_pullback):
    with pytest.raises(ParameterError):
        h2_deriv(bump_pullback, (1,), [0.5, 0.3])


def test_h2_lateral_second_derivative_stays_bounded(bump_pullback):
    """∂²_x̃ h₂ tends to h'' at the tip, so the log–log slope is flat."""
    y1 = 2.0 ** -np.arange(1, 7)
    points = np.column_stack([y1, np.zeros_like(y1)])
    values = np.abs(h2_deriv(bump_pullback, (0, 2), points))
    slope = np.polyfit(np.log(y1), np.log(values), 1)[0]
    assert slope >= -0.2


# =============================================================================
# Regularized distance and Ψ
# =============================================================================


def test_zero_boundary_distance_is_normal_coordinate(zero_pullback):
    assert regularized_distance(zero_pullback, [2.0, 0.5]) == pytest.approx(2.0, abs=1e-14)
    assert regularized_distance(zero_pullback, [-3.0, 0.5]) == pytest.approx(-3.0, abs=1e-14)


def test_regularized_distance_solves_implicit_equation(bump_pullback):
    """ρ is the root of τ + h₂(τ, x̃) = x₁."""
    x1 = 0.5
    expected = brentq(lambda t: t + h2_eval(bump_pullback, t, [0.0]) - x1, 0.0, x1, xtol=1e-15)
    assert regularized_distance(bump_pullback, [x1, 0.0]) == pytest.approx(expected, abs=1e-10)


def test_psi_round_trip(bump_pullback):
    x = np.array([[0.3, 0.2], [0.8, -0.5], [2.0, 1.5], [0.12, 0.0]])
    back = psi_inverse(bump_pullback, psi(bump_pullback, x))
    assert np.allclose(back, x, atol=1e-10)


def test_psi_inverse_formula(bump_pullback):
    y = np.array([0.3, 0.2])
    expected = np.array([0.3 + h2_eval(bump_pullback, 0.3, [0.2]), 0.2])
    assert np.allclose(psi_inverse(bump_pullback, y), expected, atol=1e-15)


def test_psi_rejects_points_below_graph(bump_pullback):
    with pytest.raises(DomainError):
        psi(bump_pullback, [0.05, 0.0])


def test_psi_inverse_rejects_non_positive_y1(bump_pullback):
    with pytest.raises(DomainError):
        psi_inverse(bump_pullback, [0.0, 0.1])


def test_regularized_distance_is_even_in_lateral_variable(bump_pullback):
    left = regularized_distance(bump_pullback, [0.4, -0.3])
    right = regularized_distance(bump_pullback, [0.4, 0.3])
    assert left == pytest.approx(right, abs=1e-10)


def test_picard_iteration_contracts(small_bump_pullback):
    x = np.array([[0.2, 0.1], [0.5, -0.4], [1.0, 0.0]])
    result = solve_fixed_point(small_bump_pullback, x)
    assert result.max_contraction <= 0.6
    assert result.residual <= small_bump_pullback.fp_tol


# =============================================================================
# Derivatives of ρ
# =============================================================================


def test_rho_derivatives_of_zero_boundary(zero_pullback):
    grad = rho_gradient(zero_pullback, [0.5, 0.3])
    hess = rho_hessian(zero_pullback, [0.5, 0.3])
    assert np.allclose(grad, [1.0, 0.0], atol=1e-14)
    assert np.allclose(hess, 0.0, atol=1e-14)


@pytest.mark.parametrize("point", [[0.3, 0.2], [0.8, -0.5]])
def test_rho_gradient_matches_finite_difference(bump_pullback, point):
    step = 1e-5
    grad = rho_gradient(bump_pullback, point)
    for j in range(2):
        offset = np.zeros(2)
        offset[j] = step
        forward = regularized_distance(bump_pullback, np.array(point) + offset)
        backward = regularized_distance(bump_pullback, np.array(point) - offset)
        assert grad[j] == pytest.approx((forward - backward) / (2 * step), abs=1e-6)


def test_rho_increases_in_normal_direction(bump_pullback):
    x = np.array([[0.15, 0.0], [0.3, 0.5], [1.0, -0.9]])
    assert np.all(rho_gradient(bump_pullback, x)[:, 0] > 0)


def test_rho_hessian_is_symmetric(bump_pullback):
    hess = rho_hessian(bump_pullback, [0.4, 0.3])
    assert np.allclose(hess, hess.T, atol=1e-14)


def test_rho_jet_respects_boundary_floor(bump_pullback):
    with pytest.raises(BoundaryFloorError):
        rho_jet(bump_pullback, np.array([[1e-10, 0.0]]))


# =============================================================================
# Distance equivalence
# =============================================================================


def test_boundary_distance_of_flat_boundary(zero_pullback):
    assert boundary_distance(zero_pullback.graph, np.array([0.7, 0.2])) == pytest.approx(0.7)


def test_distance_ratio_band_of_zero_boundary(zero_pullback):
    samples = sample_domain_points(zero_pullback, 20, np.random.default_rng(3))
    band = verify_distance_equivalence(zero_pullback, samples)
    assert band.min_ratio == pytest.approx(1.0, abs=1e-9)
    assert band.max_ratio == pytest.approx(1.0, abs=1e-9)


def test_distance_ratio_band_of_bump(bump_pullback):
    samples = sample_domain_points(bump_pullback, 50, np.random.default_rng(5))
    band = verify_distance_equivalence(bump_pullback, samples)
    refined = verify_distance_equivalence(bump_pullback, samples, spacing=1 / 4000)

    assert 0.2 <= band.min_ratio <= band.max_ratio <= 5.0
    assert refined.min_ratio == pytest.approx(band.min_ratio, rel=0.05)
    assert refined.max_ratio == pytest.approx(band.max_ratio, rel=0.05)


def test_inverse_distance_ratio_band_of_bump(bump_pullback):
    rng = np.random.default_rng(9)
    y = np.column_stack([10.0 ** rng.uniform(-3, 0, 30), rng.uniform(-1.5, 1.5, 30)])
    band = verify_inverse_distance_equivalence(bump_pullback, y)
    assert 0.2 <= band.min_ratio <= band.max_ratio <= 5.0


# =============================================================================
# Blow-up bounds
# =============================================================================


def test_blowup_of_zero_boundary_is_flat(zero_pullback):
    report = verify_blowup_bounds(zero_pullback, (2, 0), 1, 1.0)
    assert report.status == "flat-zero"
    assert report.passed


def test_blowup_bounds_hold_for_small_bump(small_bump_pullback):
    report = verify_blowup_bounds(small_bump_pullback, (2, 0), 1, 1.0)
    assert report.bound == pytest.approx(-0.2)
    assert report.h1_values is not None
    assert len(report.y1) == 8
    assert report.passed


def test_blowup_rate_of_cone_tip(cone_pullback):
    """C^{1,1/2}: second derivatives may blow up like y₁^{−1/2}."""
    report = verify_blowup_bounds(cone_pullback, (2, 0), 1, 0.5)
    assert report.bound == pytest.approx(-0.7)
    assert report.slope >= -0.7


def test_blowup_rejects_large_seminorm(bump_pullback):
    with pytest.raises(ParameterError):
        verify_blowup_bounds(bump_pullback, (2, 0), 1, 1.0)


def test_blowup_rejects_excess_regularity(small_bump_pullback):
    with pytest.raises(ParameterError):
        verify_blowup_bounds(small_bump_pullback, (2, 0), 2, 0.0)
