"""Holomorphic functional calculus of P = μ − M by contour quadrature.

    f(P)v = (1/2πi) ∫_{∂Σ_ν} f(z) (z − P)⁻¹ v dz

with ∂Σ_ν = {r e^{∓iν}} oriented counterclockwise around the spectrum.
Each ray is discretized by the trapezoid rule in log r between r_min and
r_max. Every node is one sparse complex factorization; node contributions
are summed in a fixed order so results do not depend on scheduling.

Fractional powers use the Balakrishnan representation

    P^{−α}v = (sin πα / π) ∫₀^∞ t^{−α} (t + P)⁻¹ v dt

on t = e^s, s ∈ [−30, 30], with analytic tail corrections.
"""

import logging
import math
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
import scipy.sparse as sp

from src.core.errors import ErrorCode, NumericalError, ParameterError
from src.core.seeding import complex_gaussian, substream
from src.core.types import ContourSpec, NormSpec
from src.numerics.operators import (
    DiscreteOperator,
    GramNorm,
    ResolventFactorization,
    gradient_matrix,
)
from src.numerics.spaces import GridFunction, HalfSpaceGrid, sobolev_norm_vector

logger = logging.getLogger(__name__)

CONTOUR_TOL = 1e-6
NODE_CHUNK = 32
SAMPLE_RADII = 99
SAMPLE_ANGLES = 101
BALAKRISHNAN_RANGE = 30.0
BALAKRISHNAN_STEP = 0.25
CACHE_LIMIT = 5000
RIESZ_ITERATIONS = 50

ScalarFunction = Callable[[np.ndarray], np.ndarray]


# =============================================================================
# Sector functions
# =============================================================================


def sampled_sup(fn: ScalarFunction, angle: float) -> float:
    """sup |f| over Σ_ν sampled on a polar grid that includes both rays and the real axis."""
    radii = np.logspace(-8, 8, SAMPLE_RADII)
    angles = np.linspace(-angle, angle, SAMPLE_ANGLES)
    z = radii[:, None] * np.exp(1j * angles[None, :])
    return float(np.max(np.abs(fn(z))))


@dataclass(frozen=True)
class SectorFunction:
    """A function in H¹ ∩ H∞ of a sector, with its sampled H∞ norm.

    Attributes:
        fn: vectorized callable on complex arrays
        hinf_norm: sampled sup of |f| over Σ_ν
        label: name used in result tables
        decay: (a, b) with |f(z)| ≲ min(|z|^a, |z|^{−b})
    """

    fn: ScalarFunction = field(repr=False)
    hinf_norm: float
    label: str
    decay: tuple[float, float] = (1.0, 1.0)

    @classmethod
    def create(
        cls, fn: ScalarFunction, label: str, angle: float, decay: tuple[float, float] = (1.0, 1.0)
    ) -> "SectorFunction":
        return cls(fn=fn, hinf_norm=sampled_sup(fn, angle), label=label, decay=decay)

    def __call__(self, z: np.ndarray) -> np.ndarray:
        return self.fn(z)


def regularizer(z: np.ndarray) -> np.ndarray:
    """e(z) = z/(1+z)²."""
    return z / (1.0 + z) ** 2


def imaginary_power_function(s: float) -> ScalarFunction:
    """z ↦ z^{is}·e(z) on the principal branch."""
    return lambda z: np.exp(1j * s * np.log(z)) * regularizer(z)


def standard_family(angle: float = math.pi / 4) -> list[SectorFunction]:
    """Rational, algebraic and regularized imaginary-power members of H¹ ∩ H∞."""
    family = [
        SectorFunction.create(regularizer, "z/(1+z)^2", angle),
        SectorFunction.create(lambda z: np.sqrt(z) / (1.0 + z), "z^(1/2)/(1+z)", angle, (0.5, 0.5)),
        SectorFunction.create(lambda z: z / ((1.0 + z) * (2.0 + z)), "z/((1+z)(2+z))", angle),
    ]
    for s in (-3.0, -1.0, 1.0, 3.0):
        family.append(
            SectorFunction.create(imaginary_power_function(s), f"z^({s:g}i)z/(1+z)^2", angle)
        )
    return family


def zero_function(angle: float = math.pi / 4) -> SectorFunction:
    return SectorFunction.create(lambda z: np.zeros_like(z), "zero", angle)


# =============================================================================
# Contour quadrature
# =============================================================================


class ContourNodes(NamedTuple):
    z: np.ndarray  # complex nodes, lower ray then upper ray
    coeffs: np.ndarray  # dz weights including ±e^{∓iν}/(2πi)


def contour_nodes(contour: ContourSpec) -> ContourNodes:
    """Trapezoid nodes in log r on both rays, lower ray first."""
    lo, hi = math.log(contour.r_min), math.log(contour.r_max)
    decades = math.log10(contour.r_max / contour.r_min)
    count = max(2, math.ceil(decades * contour.nodes_per_decade)) + 1
    s = np.linspace(lo, hi, count)
    step = s[1] - s[0]
    weights = np.full(count, step)
    weights[[0, -1]] *= 0.5
    r = np.exp(s)
    nu = contour.angle
    lower = r * np.exp(-1j * nu)
    upper = r * np.exp(1j * nu)
    scale = 1.0 / (2j * math.pi)
    lower_coeffs = scale * weights * r * np.exp(-1j * nu)
    upper_coeffs = -scale * weights * r * np.exp(1j * nu)
    return ContourNodes(np.concatenate([lower, upper]), np.concatenate([lower_coeffs, upper_coeffs]))


def _contour_sum(
    positive: sp.spmatrix,
    functions: list[ScalarFunction],
    vectors: np.ndarray,
    contour: ContourSpec,
    executor: Executor | None = None,
) -> np.ndarray:
    """Σ_nodes c_j f(z_j) (z_j − P)⁻¹ V for several f at once; shape (F, n, m)."""
    nodes = contour_nodes(contour)
    values = np.array([np.asarray(fn(nodes.z), dtype=complex) for fn in functions])  # (F, K)
    weighted = values * nodes.coeffs[None, :]
    total = np.zeros((len(functions),) + vectors.shape, dtype=complex)

    def node_solve(j: int) -> np.ndarray:
        return ResolventFactorization.at(positive, nodes.z[j]).solve(vectors)

    for start in range(0, len(nodes.z), NODE_CHUNK):
        indices = range(start, min(start + NODE_CHUNK, len(nodes.z)))
        solves = executor.map(node_solve, indices) if executor else map(node_solve, indices)
        for j, solution in zip(indices, solves):
            total += weighted[:, j, None, None] * solution[None]
    return total


def _as_matrix(vectors: np.ndarray) -> np.ndarray:
    vectors = np.asarray(vectors, dtype=complex)
    return vectors[:, None] if vectors.ndim == 1 else vectors


def apply_functions(
    A: DiscreteOperator,
    functions: list[ScalarFunction],
    contour: ContourSpec,
    vectors: np.ndarray,
    executor: Executor | None = None,
    check_convergence: bool = False,
) -> np.ndarray:
    """f(μ − M)V for each f; columns of V are separate vectors.

    Raises:
        NumericalError: CONTOUR_NOT_CONVERGED if doubling the contour
            resolution changes the result by more than CONTOUR_TOL relative.
    """
    positive = A.shifted()
    matrix = _as_matrix(vectors)
    result = _contour_sum(positive, functions, matrix, contour, executor)
    if check_convergence:
        finer = _contour_sum(positive, functions, matrix, contour.doubled(), executor)
        scale = max(float(np.max(np.abs(finer))), 1e-300)
        change = float(np.max(np.abs(finer - result))) / scale
        logger.debug("Contour refinement change %.3e", change)
        if change > CONTOUR_TOL:
            raise NumericalError(
                f"contour quadrature changed by {change:.3e} under refinement",
                code=ErrorCode.CONTOUR_NOT_CONVERGED,
            )
        result = finer
    return result


def apply_function(
    A: DiscreteOperator,
    f: SectorFunction,
    contour: ContourSpec,
    v: GridFunction,
    executor: Executor | None = None,
    check_convergence: bool = False,
) -> GridFunction:
    """f(A)v with A = μ − M."""
    out = apply_functions(A, [f.fn], contour, v.flat, executor, check_convergence)
    return GridFunction(v.grid, out[0, :, 0])


# =============================================================================
# H∞ bounds
# =============================================================================


class BoundRow(NamedTuple):
    label: str
    probe_id: int
    ratio: float


@dataclass(frozen=True)
class BoundEstimate:
    rows: list[BoundRow]
    value: float
    skipped: list[str]


def random_probes(grid: HalfSpaceGrid, probes: int, seed: int) -> np.ndarray:
    """One complex Gaussian probe per substream, shape (n, probes)."""
    return np.column_stack([complex_gaussian(substream(seed, i), (grid.size,)) for i in range(probes)])


def hinfty_bound_estimate(
    A: DiscreteOperator,
    family: list[SectorFunction],
    contour: ContourSpec,
    probes: int,
    norm_spec: NormSpec,
    seed: int = 0,
    executor: Executor | None = None,
) -> BoundEstimate:
    """max over family and probes of ‖f(A)v‖ / (‖f‖_{H∞}‖v‖)."""
    vectors = random_probes(A.grid, probes, seed)
    nodes = contour_nodes(contour)
    usable: list[SectorFunction] = []
    skipped: list[str] = []
    for member in family:
        with np.errstate(all="ignore"):
            values = np.asarray(member(nodes.z))
        if np.all(np.isfinite(values)):
            usable.append(member)
        else:
            logger.warning("Skipping %s: non-finite values on the contour", member.label)
            skipped.append(member.label)

    results = apply_functions(A, [m.fn for m in usable], contour, vectors, executor) if usable else None
    input_norms = [sobolev_norm_vector(A.grid, vectors[:, i], norm_spec) for i in range(probes)]
    rows: list[BoundRow] = []
    for index, member in enumerate(usable):
        for probe in range(probes):
            if member.hinf_norm == 0.0:
                ratio = 0.0
            else:
                output = sobolev_norm_vector(A.grid, results[index, :, probe], norm_spec)
                ratio = output / (member.hinf_norm * input_norms[probe])
            rows.append(BoundRow(member.label, probe, float(ratio)))
    value = max((row.ratio for row in rows), default=0.0)
    logger.info("H∞ bound estimate %.4f over %d functions", value, len(usable))
    return BoundEstimate(rows=rows, value=value, skipped=skipped)


# =============================================================================
# Fractional powers
# =============================================================================


class BalakrishnanQuadrature:
    """Factorizations of (t + P) at the quadrature nodes, cached for small systems."""

    def __init__(self, A: DiscreteOperator) -> None:
        self.positive = A.shifted()
        self._negated = (-self.positive).tocsr()
        s = np.arange(-BALAKRISHNAN_RANGE, BALAKRISHNAN_RANGE + BALAKRISHNAN_STEP / 2, BALAKRISHNAN_STEP)
        self.t = np.exp(s)
        self.weights = np.full(len(s), BALAKRISHNAN_STEP)
        self.weights[[0, -1]] *= 0.5
        self._cache_enabled = A.size <= CACHE_LIMIT
        self._factors: dict[int, ResolventFactorization] = {}
        self._inverse = ResolventFactorization(self.positive, label="of the shifted operator")

    def _factor(self, j: int) -> ResolventFactorization:
        if j in self._factors:
            return self._factors[j]
        fact = ResolventFactorization.at(self._negated, self.t[j])
        if self._cache_enabled:
            self._factors[j] = fact
        return fact

    def inverse_apply(self, alpha: float, v: np.ndarray, adjoint: bool = False) -> np.ndarray:
        """P^{−α}v (or (P^{−α})ᴴv)."""
        if not 0 < alpha < 1:
            raise ParameterError(f"α must lie in (0, 1), got {alpha}")
        v = np.asarray(v, dtype=complex)
        total = np.zeros_like(v)
        for j, (t, w) in enumerate(zip(self.t, self.weights)):
            fact = self._factor(j)
            solution = fact.solve_adjoint(v) if adjoint else fact.solve(v)
            total += w * t ** (1.0 - alpha) * solution
        upper = self.t[-1] ** (-alpha) / alpha * v
        inverse = self._inverse.solve_adjoint(v) if adjoint else self._inverse.solve(v)
        lower = self.t[0] ** (1.0 - alpha) / (1.0 - alpha) * inverse
        return math.sin(math.pi * alpha) / math.pi * (total + upper + lower)

    def apply(self, alpha: float, v: np.ndarray, adjoint: bool = False) -> np.ndarray:
        """P^{α}v = P·P^{−(1−α)}v."""
        if not 0 < alpha < 1:
            raise ParameterError(f"α must lie in (0, 1), got {alpha}")
        if adjoint:
            return self.inverse_apply(1.0 - alpha, self.positive.conj().T @ v, adjoint=True)
        return self.positive @ self.inverse_apply(1.0 - alpha, v)


def fractional_power_inverse_apply(
    A: DiscreteOperator,
    alpha: float,
    v: GridFunction,
    quadrature: BalakrishnanQuadrature | None = None,
) -> GridFunction:
    """A^{−α}v for α ∈ (0, 1)."""
    quadrature = quadrature or BalakrishnanQuadrature(A)
    return GridFunction(v.grid, quadrature.inverse_apply(alpha, v.flat))


def fractional_power_apply(
    A: DiscreteOperator,
    alpha: float,
    v: GridFunction,
    quadrature: BalakrishnanQuadrature | None = None,
) -> GridFunction:
    """A^{α}v for α ∈ (0, 1)."""
    quadrature = quadrature or BalakrishnanQuadrature(A)
    return GridFunction(v.grid, quadrature.apply(alpha, v.flat))


# =============================================================================
# Imaginary powers
# =============================================================================


def _regularized_inputs(A: DiscreteOperator, vectors: np.ndarray) -> np.ndarray:
    """e(A)⁻¹V = A⁻¹V + 2V + AV."""
    positive = A.shifted()
    inverse = ResolventFactorization(positive, label="of the shifted operator").solve(vectors)
    return inverse + 2.0 * vectors + positive @ vectors


class BipRow(NamedTuple):
    s: float
    norm: float


@dataclass(frozen=True)
class BipSweep:
    rows: list[BipRow]
    slope: float


def bip_sweep(
    A: DiscreteOperator,
    s_values: list[float],
    probes: int,
    norm_spec: NormSpec,
    contour: ContourSpec,
    seed: int = 0,
    executor: Executor | None = None,
) -> BipSweep:
    """‖A^{is}‖ estimates for each s and the fitted slope of log‖A^{is}‖ against |s|.

    A^{is}v is evaluated as (z^{is}e)(A)·e(A)⁻¹v with e(z) = z/(1+z)²,
    which removes the regularization exactly.
    """
    for s in s_values:
        if abs(s) > 5:
            raise ParameterError(f"|s| must not exceed 5, got {s}")
    vectors = random_probes(A.grid, probes, seed)
    inputs = _regularized_inputs(A, vectors)
    functions = [imaginary_power_function(s) for s in s_values]
    results = apply_functions(A, functions, contour, inputs, executor)
    input_norms = [sobolev_norm_vector(A.grid, vectors[:, i], norm_spec) for i in range(probes)]
    rows = []
    for index, s in enumerate(s_values):
        ratio = max(
            sobolev_norm_vector(A.grid, results[index, :, i], norm_spec) / input_norms[i]
            for i in range(probes)
        )
        rows.append(BipRow(float(s), float(ratio)))
    slope = 0.0
    if len({abs(row.s) for row in rows}) > 1:
        slope = float(np.polyfit([abs(r.s) for r in rows], [math.log(r.norm) for r in rows], 1)[0])
    logger.info("BIP sweep over %d values of s, slope %.4f", len(rows), slope)
    return BipSweep(rows=rows, slope=slope)


def imaginary_power_norm(
    A: DiscreteOperator,
    s: float,
    probes: int,
    norm_spec: NormSpec,
    contour: ContourSpec | None = None,
    seed: int = 0,
    executor: Executor | None = None,
) -> float:
    """Max probe ratio ‖A^{is}v‖/‖v‖.

    A^{is} is never applied bare: the contour evaluates (z^{is}e)(A) with
    e(z) = z/(1+z)² on e(A)⁻¹v = A⁻¹v + 2v + Av, which is exact. This takes
    the place of mollifying z^{is} with a small power and extrapolating the
    power to zero, so there is no extrapolation error to control.
    """
    sweep = bip_sweep(A, [s], probes, norm_spec, contour or ContourSpec(), seed, executor)
    return sweep.rows[0].norm


# =============================================================================
# Riesz transform
# =============================================================================


def riesz_transform_norm(
    A_dir: DiscreteOperator,
    norm_spec: NormSpec,
    probes: int,
    seed: int = 0,
    max_iter: int = RIESZ_ITERATIONS,
) -> float:
    """Estimate ‖∇(−Δ_Dir)^{−1/2}‖ in W^{k,p}(w_γ).

    p = 2, k = 0 uses power iteration in the weighted inner product; other
    norms take the best of random probes (a lower bound).
    """
    grid = A_dir.grid
    quadrature = BalakrishnanQuadrature(A_dir)
    gradient = gradient_matrix(grid, A_dir.bc)
    n = grid.size

    def transform(v: np.ndarray) -> np.ndarray:
        return gradient @ quadrature.inverse_apply(0.5, v)

    def output_norm(x: np.ndarray) -> float:
        parts = [sobolev_norm_vector(grid, x[i * n : (i + 1) * n], norm_spec) for i in range(grid.dim)]
        return float(np.sum(np.array(parts) ** norm_spec.p) ** (1.0 / norm_spec.p))

    if norm_spec.p != 2 or norm_spec.k != 0:
        best = 0.0
        for probe in range(probes):
            v = complex_gaussian(substream(seed, probe), (n,))
            best = max(best, output_norm(transform(v)) / sobolev_norm_vector(grid, v, norm_spec))
        return best

    gram = GramNorm(grid, norm_spec)
    weights = gram.gram.diagonal()
    stacked = np.tile(weights, grid.dim)
    v = complex_gaussian(substream(seed, 0), (n,))
    v /= gram.norm(v)
    estimate = 0.0
    for iteration in range(1, max_iter + 1):
        w = transform(v)
        value = float(np.sqrt(np.real(np.vdot(w, stacked * w))))
        estimate = max(estimate, value)
        back = quadrature.inverse_apply(0.5, gradient.conj().T @ (stacked * w), adjoint=True)
        v = back / weights
        size = gram.norm(v)
        if size == 0.0:
            break
        v /= size
        logger.debug("Riesz power iteration %d: %.6f", iteration, value)
    return estimate
