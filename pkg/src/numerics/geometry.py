"""Boundary-flattening pullback Ψ built from a regularized distance.

For a special domain O = {x₁ > h(x̃)} the regularized distance ρ is the
fixed point of τ = x₁ − h₂(τ, x̃), where

    h₂(τ, x̃) = ∫ h(x̃ − (τ/L) z) ϕ(z) dz

is a mollified copy of h whose smoothing radius shrinks with τ. Then
Ψ(x) = (ρ(x), x̃) flattens ∂O onto ∂ℝ^d_+ and Ψ⁻¹(y) = (y₁ + h₂(y), ỹ).

Derivatives of h₂ put up to ℓ derivatives on h and the rest on the
mollifier kernel. Kernel terms are tracked symbolically as
t^{−k}·I_ψ with ψ(u) = u^a ∂^b ϕ(u) and I_ψ = ∫ g(x̃ − (t/L)u) ψ(u) du:

    ∂_j (t^{−k} I_ψ) = L t^{−k−1} I_{∂_j ψ}
    ∂_t (t^{−k} I_ψ) = t^{−k−1} I_{Tψ − kψ},  Tψ = −(m+|a|)ψ − Σ_i u^{a+e_i} ∂^{b+e_i} ϕ
"""

import functools
import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.stats import qmc

from src.core.errors import (
    BoundaryFloorError,
    DomainError,
    NotConvergedError,
    ParameterError,
)
from src.numerics.boundary import BoundaryGraph, MultiIndex
from src.numerics.mollifier import MollifierSpec

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
CHUNK = 2048
NEWTON_SWITCH = 1e-6
CONTRACTION_NOISE_FLOOR = 1e-10

Term = tuple[int, MultiIndex, MultiIndex]  # (k, a, b) for t^{-k} I_{u^a ∂^b ϕ}


# =============================================================================
# Multi-index helpers
# =============================================================================


def compositions(total: int, parts: int) -> list[MultiIndex]:
    """All multi-indices of length ``parts`` with entries summing to ``total``."""
    if parts == 0:
        return [()] if total == 0 else []
    return [c for c in itertools.product(range(total + 1), repeat=parts) if sum(c) == total]


def _multinomial(total: int, parts: MultiIndex) -> float:
    out = math.factorial(total)
    for p in parts:
        out //= math.factorial(p)
    return float(out)


def _shift(index: MultiIndex, i: int, delta: int) -> MultiIndex:
    return index[:i] + (index[i] + delta,) + index[i + 1 :]


def _as_points(x: np.ndarray, dim: int) -> tuple[np.ndarray, bool]:
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[-1] != dim:
        raise ParameterError(f"points need {dim} coordinates, got shape {pts.shape}")
    return pts, single


def _unwrap(values: np.ndarray, single: bool):
    return values[0] if single else values


# =============================================================================
# Seminorm estimation
# =============================================================================


def _support_samples(graph: BoundaryGraph, count: int, seed: int) -> np.ndarray:
    """Origin plus a scrambled Sobol prefix over the box around the support."""
    m = graph.lateral_dim
    sampler = qmc.Sobol(d=m, scramble=True, seed=seed)
    base = sampler.random_base2(max(1, math.ceil(math.log2(count))))[: count - 1]
    half = 1.05 * graph.support_radius
    points = qmc.scale(base, -half * np.ones(m), half * np.ones(m))
    return np.vstack([np.zeros((1, m)), points])


def _holder_quotient(
    graph: BoundaryGraph, alpha: MultiIndex, points: np.ndarray, lam: float
) -> float:
    f = graph.deriv(alpha, points)
    # global pairs between consecutive samples
    diff = np.linalg.norm(points[1:] - points[:-1], axis=-1)
    keep = diff > 0
    best = float(np.max(np.abs(f[1:] - f[:-1])[keep] / diff[keep] ** lam, initial=0.0))
    # local pairs at dyadic offsets along each axis
    for j in range(1, 13):
        delta = graph.support_radius * 2.0**-j
        for i in range(graph.lateral_dim):
            shifted = points.copy()
            shifted[:, i] += delta
            g = graph.deriv(alpha, shifted)
            best = max(best, float(np.max(np.abs(g - f))) / delta**lam)
    return best


def seminorm(
    graph: BoundaryGraph,
    ell: int,
    lam: float,
    sample_count: int = 4096,
    seed: int = 0,
) -> float:
    """Sampled ‖h‖_{C^{ℓ,λ}}: sup-norms of ∂^α h for |α| ≤ ℓ plus λ-Hölder quotients at |α| = ℓ.

    λ = 0 means the plain C^ℓ norm. More samples never lower the value:
    the sample set for n points is a prefix of the set for n' > n points.
    """
    if ell > graph.smoothness:
        raise ParameterError(f"ℓ = {ell} exceeds the graph smoothness {graph.smoothness}")
    if lam > graph.holder + 1e-15:
        raise ParameterError(f"λ = {lam} exceeds the graph Hölder exponent {graph.holder}")
    if sample_count < 1000:
        raise ParameterError("sample_count must be at least 1000")

    points = _support_samples(graph, sample_count, seed)
    total = 0.0
    for order in range(ell + 1):
        for alpha in compositions(order, graph.lateral_dim):
            total += float(np.max(np.abs(graph.deriv(alpha, points))))
    if lam > 0:
        for alpha in compositions(ell, graph.lateral_dim):
            total += _holder_quotient(graph, alpha, points, lam)
    return total


def lipschitz_seminorm(graph: BoundaryGraph, sample_count: int = 4096, seed: int = 0) -> float:
    """Sampled [O]_{C^{0,1}} (an upper bound through first derivatives when ℓ ≥ 1)."""
    if graph.smoothness >= 1:
        return seminorm(graph, 1, 0.0, sample_count, seed)
    if graph.holder >= 1.0:
        return seminorm(graph, 0, 1.0, sample_count, seed)
    raise ParameterError("the boundary graph must be at least C^{0,1}")


# =============================================================================
# PullbackMap
# =============================================================================


@dataclass(frozen=True, eq=False)
class PullbackMap:
    """The pullback Ψ for one boundary graph.

    Immutable after construction; safe to share across threads.
    """

    graph: BoundaryGraph
    mollifier: MollifierSpec
    L: float
    fp_tol: float = 1e-12
    fp_max_iter: int = 200
    seminorm_cache: float = 0.0
    y_floor: float = 1e-8

    @property
    def dim(self) -> int:
        return self.graph.dim

    @classmethod
    def build(
        cls,
        graph: BoundaryGraph,
        mollifier: MollifierSpec | None = None,
        fp_tol: float = 1e-12,
        fp_max_iter: int = 200,
        sample_count: int = 4096,
        seed: int = 0,
        y_floor: float = 1e-8,
    ) -> "PullbackMap":
        """Estimate [O]_{C^{ℓ,λ}} and pick the Lipschitz scale L."""
        if mollifier is None:
            mollifier = MollifierSpec(dim=graph.dim)
        if mollifier.dim != graph.dim:
            raise ParameterError("mollifier and boundary graph dimensions differ")
        estimate = seminorm(graph, graph.smoothness, graph.holder, sample_count, seed)
        if estimate <= 1.0:
            L = 4.0 * SQRT2
        else:
            lip = lipschitz_seminorm(graph, sample_count, seed)
            L = 2.0 * SQRT2 * (1.0 + lip) * 1.05
        logger.info("Pullback for d=%d: seminorm %.4g, L = %.4g", graph.dim, estimate, L)
        return cls(
            graph=graph,
            mollifier=mollifier,
            L=L,
            fp_tol=fp_tol,
            fp_max_iter=fp_max_iter,
            seminorm_cache=estimate,
            y_floor=y_floor,
        )


# =============================================================================
# h₂ and its derivatives
# =============================================================================


def _lateral_step(terms: dict[Term, float], j: int, L: float) -> dict[Term, float]:
    out: dict[Term, float] = defaultdict(float)
    for (k, a, b), c in terms.items():
        if a[j] > 0:
            out[(k + 1, _shift(a, j, -1), b)] += c * L * a[j]
        out[(k + 1, a, _shift(b, j, 1))] += c * L
    return out


def _normal_step(terms: dict[Term, float], m: int) -> dict[Term, float]:
    out: dict[Term, float] = defaultdict(float)
    for (k, a, b), c in terms.items():
        out[(k + 1, a, b)] += c * (-(m + sum(a)) - k)
        for i in range(m):
            out[(k + 1, _shift(a, i, 1), _shift(b, i, 1))] -= c
    return out


@functools.lru_cache(maxsize=256)
def _derivative_plan(
    alpha: MultiIndex, ell: int, m: int, L: float
) -> tuple[tuple[MultiIndex, tuple[tuple[Term, float], ...]], ...]:
    """Distribute ∂^α between h (normal derivatives first, at most ℓ) and the kernel."""
    beta1 = min(alpha[0], ell)
    budget = ell - beta1
    beta_lat = []
    for count in alpha[1:]:
        take = min(count, budget)
        beta_lat.append(take)
        budget -= take
    rest_lat = [count - take for count, take in zip(alpha[1:], beta_lat)]
    rest_t = alpha[0] - beta1

    zero = (0,) * m
    plan = []
    for nu in compositions(beta1, m):
        coeff = (-1.0 / L) ** beta1 * _multinomial(beta1, nu)
        terms: dict[Term, float] = {(0, nu, zero): coeff}
        for j, count in enumerate(rest_lat):
            for _ in range(count):
                terms = _lateral_step(terms, j, L)
        for _ in range(rest_t):
            terms = _normal_step(terms, m)
        g_index = tuple(n + b for n, b in zip(nu, beta_lat))
        plan.append((g_index, tuple((term, c) for term, c in terms.items() if c != 0.0)))
    return tuple(plan)


def _h2_derivative(
    pullback: PullbackMap, alpha: MultiIndex, t: np.ndarray, xt: np.ndarray
) -> np.ndarray:
    graph, mol, L = pullback.graph, pullback.mollifier, pullback.L
    plan = _derivative_plan(tuple(alpha), graph.smoothness, graph.lateral_dim, L)
    nodes = mol.lateral_nodes
    out = np.zeros(t.shape[0])
    for start in range(0, t.shape[0], CHUNK):
        sl = slice(start, start + CHUNK)
        ts, xs = t[sl], xt[sl]
        args = xs[:, None, :] - (ts / L)[:, None, None] * nodes[None, :, :]
        for g_index, terms in plan:
            g = graph.deriv(g_index, args)
            for (k, a, b), c in terms:
                integral = g @ mol.kernel_weights(a, b)
                out[sl] += c * (ts ** (-k) if k else 1.0) * integral
    return out


def h2_eval(pullback: PullbackMap, tau, xt):
    """h₂(τ, x̃) by tensor quadrature; τ may be any real number."""
    m = pullback.graph.lateral_dim
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
    xt_arr = np.asarray(xt, dtype=float).reshape(-1, m)
    if xt_arr.shape[0] == 1 and tau_arr.shape[0] > 1:
        xt_arr = np.repeat(xt_arr, tau_arr.shape[0], axis=0)
    values = _h2_derivative(pullback, (0,) * pullback.dim, tau_arr, xt_arr)
    return float(values[0]) if np.ndim(tau) == 0 and xt_arr.shape[0] == 1 else values


def h2_deriv(pullback: PullbackMap, alpha: MultiIndex, y):
    """∂^α h₂ at half-space points y = (y₁, ỹ) with y₁ > 0."""
    pts, single = _as_points(y, pullback.dim)
    if len(alpha) != pullback.dim:
        raise ParameterError(f"multi-index {alpha} needs {pullback.dim} entries")
    if np.any(pts[:, 0] <= 0):
        raise DomainError("h2_deriv needs y₁ > 0")
    values = _h2_derivative(pullback, tuple(alpha), pts[:, 0], pts[:, 1:])
    return _unwrap(values, single)


# =============================================================================
# Regularized distance and Ψ
# =============================================================================


@dataclass(frozen=True)
class FixedPointResult:
    """ρ values plus solver diagnostics for one batch of points."""

    rho: np.ndarray
    iterations: int
    max_contraction: float
    residual: float


def solve_fixed_point(pullback: PullbackMap, x) -> FixedPointResult:
    """Solve ρ = x₁ − h₂(ρ, x̃) by Picard iteration, finished by Newton when ℓ ≥ 1.

    Raises:
        NotConvergedError: if the residual stays above fp_tol.
    """
    pts, _ = _as_points(x, pullback.dim)
    x1, xt = pts[:, 0], pts[:, 1:]
    zero = (0,) * pullback.dim
    newton = pullback.graph.smoothness >= 1
    switch = max(pullback.fp_tol, NEWTON_SWITCH) if newton else pullback.fp_tol

    tau = x1 - pullback.graph.eval(xt)
    prev_step: np.ndarray | None = None
    max_ratio = 0.0
    residual = math.inf
    iterations = 0
    for iterations in range(1, pullback.fp_max_iter + 1):
        new = x1 - _h2_derivative(pullback, zero, tau, xt)
        step = np.abs(new - tau)
        residual = float(np.max(step))
        if residual <= switch:
            break
        if prev_step is not None:
            live = prev_step > CONTRACTION_NOISE_FLOOR
            if live.any():
                max_ratio = max(max_ratio, float(np.max(step[live] / prev_step[live])))
        logger.debug("Picard step %d residual %.3e", iterations, residual)
        tau, prev_step = new, step

    if newton and residual > pullback.fp_tol:
        dt = (1,) + (0,) * (pullback.dim - 1)
        for _ in range(8):
            E = tau + _h2_derivative(pullback, zero, tau, xt) - x1
            E_tau = 1.0 + _h2_derivative(pullback, dt, tau, xt)
            tau = tau - E / E_tau
            residual = float(
                np.max(np.abs(tau + _h2_derivative(pullback, zero, tau, xt) - x1))
            )
            iterations += 1
            if residual <= pullback.fp_tol:
                break

    if residual > pullback.fp_tol:
        raise NotConvergedError(
            f"fixed point did not converge in {iterations} iterations "
            f"(last residual {residual:.3e}, L = {pullback.L:.4g})"
        )
    return FixedPointResult(
        rho=tau, iterations=iterations, max_contraction=max_ratio, residual=residual
    )


def regularized_distance(pullback: PullbackMap, x):
    """ρ(x); positive above the boundary, negative below it."""
    pts, single = _as_points(x, pullback.dim)
    return _unwrap(solve_fixed_point(pullback, pts).rho, single)


def psi(pullback: PullbackMap, x):
    """Ψ(x) = (ρ(x), x̃) for x ∈ O."""
    pts, single = _as_points(x, pullback.dim)
    outside = pts[:, 0] <= pullback.graph.eval(pts[:, 1:])
    if outside.any():
        raise DomainError(f"{int(outside.sum())} point(s) satisfy x₁ ≤ h(x̃)")
    out = pts.copy()
    out[:, 0] = solve_fixed_point(pullback, pts).rho
    return _unwrap(out, single)


def psi_inverse(pullback: PullbackMap, y):
    """Ψ⁻¹(y) = (y₁ + h₂(y₁, ỹ), ỹ) for y₁ > 0."""
    pts, single = _as_points(y, pullback.dim)
    if np.any(pts[:, 0] <= 0):
        raise DomainError("psi_inverse needs y₁ > 0")
    out = pts.copy()
    out[:, 0] = pts[:, 0] + _h2_derivative(pullback, (0,) * pullback.dim, pts[:, 0], pts[:, 1:])
    return _unwrap(out, single)


# =============================================================================
# Derivatives of ρ
# =============================================================================


class RhoJet(NamedTuple):
    gradient: np.ndarray  # (N, d)
    hessian: np.ndarray  # (N, d, d)


def rho_jet(pullback: PullbackMap, y: np.ndarray) -> RhoJet:
    """∇ρ and ∇²ρ at x = Ψ⁻¹(y), evaluated directly at half-space points y.

    Uses E(x, τ) = τ + h₂(τ, x̃) − x₁ = 0 and the implicit function theorem.
    """
    pts, _ = _as_points(y, pullback.dim)
    d = pullback.dim
    t, xt = pts[:, 0], pts[:, 1:]
    if np.any(t < pullback.y_floor):
        raise BoundaryFloorError(
            f"evaluation below the boundary floor y₁ = {pullback.y_floor:g} "
            f"(min y₁ = {float(t.min()):.3e})"
        )

    def unit(*axes: int) -> MultiIndex:
        index = [0] * d
        for axis in axes:
            index[axis] += 1
        return tuple(index)

    def h2d(alpha: MultiIndex) -> np.ndarray:
        return _h2_derivative(pullback, alpha, t, xt)

    n = t.shape[0]
    E_tau = 1.0 + h2d(unit(0))
    E_tt = h2d(unit(0, 0))
    grad = np.zeros((n, d))
    grad[:, 0] = 1.0 / E_tau
    mixed = np.zeros((n, d))
    lateral = np.zeros((n, d, d))
    for j in range(1, d):
        grad[:, j] = -h2d(unit(j)) / E_tau
        mixed[:, j] = h2d(unit(0, j))
        for k in range(j, d):
            value = h2d(unit(j, k))
            lateral[:, j, k] = value
            lateral[:, k, j] = value

    outer = grad[:, :, None] * grad[:, None, :]
    cross = grad[:, :, None] * mixed[:, None, :]
    hess = -(E_tt[:, None, None] * outer + cross + cross.transpose(0, 2, 1) + lateral)
    hess /= E_tau[:, None, None]
    return RhoJet(gradient=grad, hessian=hess)


def rho_gradient(pullback: PullbackMap, x):
    """∇ρ(x) for x strictly inside O."""
    pts, single = _as_points(x, pullback.dim)
    return _unwrap(rho_jet(pullback, psi(pullback, pts)).gradient, single)


def rho_hessian(pullback: PullbackMap, x):
    """∇²ρ(x) for x strictly inside O."""
    pts, single = _as_points(x, pullback.dim)
    return _unwrap(rho_jet(pullback, psi(pullback, pts)).hessian, single)


# =============================================================================
# Verification
# =============================================================================


class RatioBand(NamedTuple):
    min_ratio: float
    max_ratio: float


def boundary_distance(graph: BoundaryGraph, x: np.ndarray, spacing: float | None = None) -> float:
    """dist(x, ∂O) by a lateral lattice search refined with a bounded minimizer.

    The search window |z̃ − x̃| ≤ |x₁ − h(x̃)| always contains the minimizer
    because the vertical distance bounds the true one.
    """
    spacing = spacing or graph.support_radius / 2000
    x = np.asarray(x, dtype=float)
    x1, xt = x[0], x[1:]
    m = graph.lateral_dim
    window = abs(x1 - float(graph.eval(xt)))
    if window == 0.0:
        return 0.0

    def dist2(z: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(z)
        return (x1 - graph.eval(z)) ** 2 + np.sum((z - xt) ** 2, axis=-1)

    if m == 1:
        n = int(math.ceil(window / spacing))
        lattice = (xt[0] + spacing * np.arange(-n, n + 1))[:, None]
        values = dist2(lattice)
        i = int(np.argmin(values))
        lo = lattice[max(i - 1, 0), 0]
        hi = lattice[min(i + 1, len(lattice) - 1), 0]
        best = float(values[i])
        if hi > lo:
            res = minimize_scalar(
                lambda s: float(dist2(np.array([[s]]))[0]),
                bounds=(lo, hi),
                method="bounded",
                options={"xatol": max((hi - lo) * 1e-10, 1e-15)},
            )
            best = min(best, float(res.fun))
        return math.sqrt(best)

    per_axis = min(int(math.ceil(window / spacing)), 100)
    axis = np.linspace(-window, window, 2 * per_axis + 1)
    offsets = np.array(list(itertools.product(axis, repeat=m)))
    lattice = xt + offsets
    values = dist2(lattice)
    i = int(np.argmin(values))
    step = axis[1] - axis[0]
    start = lattice[i]
    res = minimize(
        lambda z: float(dist2(z)[0]),
        start,
        method="L-BFGS-B",
        bounds=[(c - step, c + step) for c in start],
    )
    return math.sqrt(min(float(values[i]), float(res.fun)))


def sample_domain_points(
    pullback: PullbackMap, n: int, rng: np.random.Generator, y1_min: float = 1e-4
) -> np.ndarray:
    """Points of O with log-uniform distance proxy y₁ ∈ [y1_min, 1]."""
    m = pullback.graph.lateral_dim
    y1 = 10.0 ** rng.uniform(math.log10(y1_min), 0.0, size=n)
    half = 1.5 * pullback.graph.support_radius
    lateral = rng.uniform(-half, half, size=(n, m))
    return psi_inverse(pullback, np.column_stack([y1, lateral]))


def verify_distance_equivalence(
    pullback: PullbackMap, samples: np.ndarray, spacing: float | None = None
) -> RatioBand:
    """Extreme values of ρ(x)/dist(x, ∂O) over domain samples."""
    pts, _ = _as_points(samples, pullback.dim)
    rho = solve_fixed_point(pullback, pts).rho
    dist = np.array([boundary_distance(pullback.graph, x, spacing) for x in pts])
    ratios = rho / dist
    logger.info("Distance ratios over %d samples in [%.4f, %.4f]", len(pts), ratios.min(), ratios.max())
    return RatioBand(float(ratios.min()), float(ratios.max()))


def verify_inverse_distance_equivalence(
    pullback: PullbackMap, half_space_samples: np.ndarray, spacing: float | None = None
) -> RatioBand:
    """Extreme values of dist(Ψ⁻¹(y), ∂O)/y₁ over half-space samples."""
    pts, _ = _as_points(half_space_samples, pullback.dim)
    domain = psi_inverse(pullback, pts)
    dist = np.array([boundary_distance(pullback.graph, x, spacing) for x in domain])
    ratios = dist / pts[:, 0]
    return RatioBand(float(ratios.min()), float(ratios.max()))


@dataclass(frozen=True)
class BlowupReport:
    """Log–log slope of |∂^α h₂| (and |∂^α h₁| for |α| ≤ 2) as y₁ → 0."""

    alpha: MultiIndex
    y1: list[float]
    h2_values: list[float]
    h1_values: list[float] | None
    slope: float
    h1_slope: float | None
    bound: float
    status: str

    @property
    def passed(self) -> bool:
        slopes = [self.slope] + ([self.h1_slope] if self.h1_slope is not None else [])
        return all(s >= self.bound for s in slopes)


def _fit_slope(y1: np.ndarray, values: np.ndarray) -> tuple[float, str]:
    if float(np.max(values)) < 1e-14:
        return 0.0, "flat-zero"
    positive = np.maximum(values, 1e-300)
    slope = float(np.polyfit(np.log(y1), np.log(positive), 1)[0])
    return slope, "bounded" if slope >= -1e-3 else "blowup"


def verify_blowup_bounds(
    pullback: PullbackMap,
    alpha: MultiIndex,
    ell0: int,
    lam0: float,
    dyadic_depth: int = 8,
    lateral_point: np.ndarray | None = None,
) -> BlowupReport:
    """Check slope ≥ −(|α| − ℓ₀ − λ₀)₊ − 0.2 along y₁ = 2⁻¹, …, 2^{−depth}."""
    graph = pullback.graph
    if ell0 > graph.smoothness or lam0 > graph.holder:
        raise ParameterError(f"(ℓ₀, λ₀) = ({ell0}, {lam0}) exceeds the graph regularity")
    if pullback.seminorm_cache > 1.0:
        raise ParameterError(
            f"blow-up bounds need [O]_{{C^{{ℓ,λ}}}} ≤ 1 (estimate {pullback.seminorm_cache:.3f})"
        )
    alpha = tuple(alpha)
    order = sum(alpha)
    if lateral_point is None:
        lateral_point = np.zeros(graph.lateral_dim)
    y1 = 2.0 ** -np.arange(1, dyadic_depth + 1)
    y = np.column_stack([y1, np.tile(lateral_point, (dyadic_depth, 1))])
    h2_values = np.abs(_h2_derivative(pullback, alpha, y1, y[:, 1:]))
    slope, status = _fit_slope(y1, h2_values)

    h1_values = h1_slope = None
    if 1 <= order <= 2:
        jet = rho_jet(pullback, y)
        nonzero = [i for i, a in enumerate(alpha) for _ in range(a)]
        if order == 1:
            j = nonzero[0]
            vals = (1.0 if j == 0 else 0.0) - jet.gradient[:, j]
        else:
            vals = -jet.hessian[:, nonzero[0], nonzero[1]]
        h1_arr = np.abs(vals)
        h1_slope, _ = _fit_slope(y1, h1_arr)
        h1_values = h1_arr.tolist()

    bound = -max(order - ell0 - lam0, 0.0) - 0.2
    return BlowupReport(
        alpha=alpha,
        y1=y1.tolist(),
        h2_values=h2_values.tolist(),
        h1_values=h1_values,
        slope=slope,
        h1_slope=h1_slope,
        bound=bound,
        status=status,
    )
