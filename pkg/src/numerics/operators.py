"""Discrete Laplacians, pullback perturbations and resolvent solves.

The normal part of Δ is a cell-centered finite-volume operator on the
graded grid, so it is symmetric in the inner product weighted by cell
widths; the lateral part is the periodic three-point stencil. Flattened
vectors use row-major order, so ∂₁-type operators are ``kron(N, I)`` and
lateral ones ``kron(I, L)``.

An operator's ``matrix`` holds M (for instance Δ); the positive operator
entering the calculus is ``A.shifted() = μI − M``.
"""

import logging
from concurrent.futures import Executor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigvals
from scipy.sparse.linalg import splu

from src.core.errors import (
    ErrorCode,
    NearSpectrumError,
    NumericalError,
    ParameterError,
)
from src.core.output import write_csv
from src.core.seeding import complex_gaussian, substream
from src.core.types import BoundaryCondition, NormSpec, OperatorLabel
from src.numerics.geometry import PullbackMap, rho_jet
from src.numerics.spaces import (
    GridFunction,
    HalfSpaceGrid,
    check_traces,
    fornberg_weights,
    multi_indices,
    sobolev_norm,
    sobolev_norm_vector,
)

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10  # normwise backward error
POWER_ITERATIONS = 20
POWER_TOL = 1e-3
NORM_PROBES = 64


# =============================================================================
# DiscreteOperator
# =============================================================================


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Sparse complex matrix on a grid plus its boundary condition and shift."""

    grid: HalfSpaceGrid
    matrix: sp.csr_matrix
    bc: BoundaryCondition
    label: OperatorLabel
    mu: float = 0.0

    def __post_init__(self) -> None:
        matrix = sp.csr_matrix(self.matrix, dtype=complex)
        if matrix.shape != (self.grid.size, self.grid.size):
            raise ParameterError(f"matrix shape {matrix.shape} does not match grid size {self.grid.size}")
        object.__setattr__(self, "matrix", matrix)

    @property
    def size(self) -> int:
        return self.grid.size

    def with_mu(self, mu: float) -> "DiscreteOperator":
        if mu < 0:
            raise ParameterError(f"μ must be ≥ 0, got {mu}")
        return replace(self, mu=mu)

    def shifted(self, mu: float | None = None) -> sp.csr_matrix:
        """μI − M."""
        mu = self.mu if mu is None else mu
        return (mu * sp.identity(self.size, dtype=complex, format="csr") - self.matrix).tocsr()

    def apply(self, f: GridFunction) -> GridFunction:
        return GridFunction(self.grid, self.matrix @ f.flat)


# =============================================================================
# One-dimensional building blocks
# =============================================================================


def normal_laplacian(grid: HalfSpaceGrid, bc: BoundaryCondition) -> sp.csr_matrix:
    """Finite-volume ∂₁² with flux u₀/x₀ (Dirichlet) or zero flux (Neumann) at both ends."""
    x, w, edges = grid.normal_nodes, grid.normal_widths, grid.normal_edges
    n = len(x)
    inv = 1.0 / np.diff(x)  # interior edge transmissibilities
    lower = np.zeros(n)
    upper = np.zeros(n)
    upper[:-1] = inv
    lower[1:] = inv
    diag = -(upper + lower)
    if bc == BoundaryCondition.DIRICHLET:
        diag[0] -= 1.0 / x[0]
        diag[-1] -= 1.0 / (edges[-1] - x[-1])
    matrix = sp.diags([lower[1:], diag, upper[:-1]], [-1, 0, 1], shape=(n, n), format="csr")
    return sp.diags(1.0 / w) @ matrix


def normal_first_derivative(grid: HalfSpaceGrid, bc: BoundaryCondition) -> sp.csr_matrix:
    """Centered three-point ∂₁ with the boundary condition built into the end rows."""
    x = grid.normal_nodes
    X = grid.normal_edges[-1]
    n = len(x)
    rows, cols, vals = [], [], []

    def put(i: int, window: list[int], weights: np.ndarray) -> None:
        rows.extend([i] * len(window))
        cols.extend(window)
        vals.extend(weights.tolist())

    for i in range(1, n - 1):
        put(i, [i - 1, i, i + 1], fornberg_weights(x[i], x[i - 1 : i + 2], 1)[:, 1])

    if bc == BoundaryCondition.DIRICHLET:
        first = fornberg_weights(x[0], np.array([0.0, x[0], x[1]]), 1)[1:, 1]
        last = fornberg_weights(x[-1], np.array([x[-2], x[-1], X]), 1)[:2, 1]
        put(0, [0, 1], first)
        put(n - 1, [n - 2, n - 1], last)
    else:
        c0 = 2.0 * x[0] / (x[1] ** 2 - x[0] ** 2)
        put(0, [0, 1], np.array([-c0, c0]))
        s1, s2 = X - x[-1], X - x[-2]
        c1 = 2.0 * s1 / (s2**2 - s1**2)
        put(n - 1, [n - 2, n - 1], np.array([-c1, c1]))
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def lateral_laplacian(grid: HalfSpaceGrid) -> sp.csr_matrix:
    n, h = len(grid.lateral_nodes), grid.lateral_spacing
    matrix = sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(n, n), format="lil")
    matrix[0, n - 1] = 1.0
    matrix[n - 1, 0] = 1.0
    return (matrix / h**2).tocsr()


def lateral_first_derivative(grid: HalfSpaceGrid) -> sp.csr_matrix:
    n, h = len(grid.lateral_nodes), grid.lateral_spacing
    matrix = sp.diags([-1.0, 1.0], [-1, 1], shape=(n, n), format="lil")
    matrix[0, n - 1] = -1.0
    matrix[n - 1, 0] = 1.0
    return (matrix / (2.0 * h)).tocsr()


def _normal(grid: HalfSpaceGrid, block: sp.spmatrix) -> sp.csr_matrix:
    if grid.dim == 1:
        return sp.csr_matrix(block)
    return sp.kron(block, sp.identity(len(grid.lateral_nodes)), format="csr")


def _lateral(grid: HalfSpaceGrid, block: sp.spmatrix) -> sp.csr_matrix:
    return sp.kron(sp.identity(grid.n1), block, format="csr")


def gradient_matrix(grid: HalfSpaceGrid, bc: BoundaryCondition) -> sp.csr_matrix:
    """Stacked bc-aware (∂₁, ∂₂) acting on flattened vectors."""
    normal = _normal(grid, normal_first_derivative(grid, bc))
    if grid.dim == 1:
        return normal
    return sp.vstack([normal, _lateral(grid, lateral_first_derivative(grid))], format="csr")


# =============================================================================
# Assembly
# =============================================================================


def assemble_laplacian(grid: HalfSpaceGrid, bc: BoundaryCondition) -> DiscreteOperator:
    """Δ_bc on the grid."""
    matrix = _normal(grid, normal_laplacian(grid, bc))
    if grid.dim == 2:
        matrix = matrix + _lateral(grid, lateral_laplacian(grid))
    logger.debug("Assembled %s Laplacian with %d unknowns", bc.value, grid.size)
    return DiscreteOperator(grid=grid, matrix=matrix, bc=bc, label=OperatorLabel.LAPLACIAN)


@dataclass(frozen=True, eq=False)
class PerturbationCoefficients:
    """(∇h₁)∘Ψ⁻¹ and (Δh₁)∘Ψ⁻¹ at the grid nodes, flattened row-major.

    Attributes:
        c1: |c2|², shape (N,)
        c2: ∇h₁∘Ψ⁻¹, shape (N, d)
        c3: Δh₁∘Ψ⁻¹, shape (N,)
        y1: normal coordinate of each node
    """

    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray
    y1: np.ndarray = field(repr=False)

    def c3_weighted_sup(self, lam: float) -> float:
        """max |c3(y)|·y₁^{1−λ}, bounded for C^{1,λ} boundaries."""
        return float(np.max(np.abs(self.c3) * self.y1 ** (1.0 - lam)))


def perturbation_coefficients(grid: HalfSpaceGrid, pullback: PullbackMap) -> PerturbationCoefficients:
    """Evaluate the coefficient fields from the ρ jet at every node."""
    if grid.dim != pullback.dim:
        raise ParameterError(f"grid dimension {grid.dim} differs from domain dimension {pullback.dim}")
    y = grid.points()
    jet = rho_jet(pullback, y)
    c2 = -jet.gradient
    c2[:, 0] += 1.0
    c1 = np.sum(c2**2, axis=1)
    c3 = -np.trace(jet.hessian, axis1=1, axis2=2)
    return PerturbationCoefficients(c1=c1, c2=c2, c3=c3, y1=y[:, 0].copy())


def assemble_perturbations(
    grid: HalfSpaceGrid, coeffs: PerturbationCoefficients, bc: BoundaryCondition
) -> dict[OperatorLabel, DiscreteOperator]:
    """B₁ = c1∂₁², B₂ = −2Σᵢ c2ᵢ∂₁∂ᵢ, B₃ = −c3∂₁ with the Laplacian's stencils."""
    d11 = _normal(grid, normal_laplacian(grid, bc))
    d1 = _normal(grid, normal_first_derivative(grid, bc))
    b1 = sp.diags(coeffs.c1) @ d11
    b2 = -2.0 * sp.diags(coeffs.c2[:, 0]) @ d11
    if grid.dim == 2:
        mixed = sp.kron(normal_first_derivative(grid, bc), lateral_first_derivative(grid), format="csr")
        b2 = b2 - 2.0 * sp.diags(coeffs.c2[:, 1]) @ mixed
    b3 = -sp.diags(coeffs.c3) @ d1
    parts = {OperatorLabel.B1: b1, OperatorLabel.B2: b2, OperatorLabel.B3: b3}
    return {
        label: DiscreteOperator(grid=grid, matrix=matrix, bc=bc, label=label)
        for label, matrix in parts.items()
    }


def perturbation_operator(
    grid: HalfSpaceGrid, coeffs: PerturbationCoefficients, bc: BoundaryCondition
) -> DiscreteOperator:
    """B = B₁ + B₂ + B₃."""
    parts = assemble_perturbations(grid, coeffs, bc)
    matrix = sum((op.matrix for op in parts.values()), sp.csr_matrix((grid.size, grid.size)))
    return DiscreteOperator(grid=grid, matrix=matrix, bc=bc, label=OperatorLabel.PERTURBATION)


def assemble_pullback_laplacian(
    grid: HalfSpaceGrid, pullback: PullbackMap, bc: BoundaryCondition
) -> tuple[DiscreteOperator, PerturbationCoefficients]:
    """Δ^Ψ = Δ + B₁ + B₂ + B₃ and its coefficient fields."""
    coeffs = perturbation_coefficients(grid, pullback)
    laplacian = assemble_laplacian(grid, bc)
    perturbation = perturbation_operator(grid, coeffs, bc)
    matrix = laplacian.matrix + perturbation.matrix
    logger.info(
        "Pullback Laplacian: max c1 %.3e, max |c3| %.3e", float(coeffs.c1.max()), float(np.abs(coeffs.c3).max())
    )
    op = DiscreteOperator(grid=grid, matrix=matrix, bc=bc, label=OperatorLabel.PULLBACK_LAPLACIAN)
    return op, coeffs


def export_coo(op: DiscreteOperator, path: Path) -> Path:
    """Write the matrix as (row, col, re, im) triplets."""
    coo = op.matrix.tocoo()
    rows = (
        [int(i), int(j), float(v.real), float(v.imag)]
        for i, j, v in zip(coo.row, coo.col, coo.data)
    )
    return write_csv(path, ["row", "col", "re", "im"], rows)


# =============================================================================
# Resolvents
# =============================================================================


class ResolventFactorization:
    """Sparse LU of one shifted system, reusable for any number of solves."""

    def __init__(self, system: sp.spmatrix, label: str = "") -> None:
        self.system = sp.csc_matrix(system, dtype=complex)
        self.label = label
        self.norm_inf = float(abs(self.system).sum(axis=1).max()) if self.system.nnz else 0.0
        try:
            self._lu = splu(self.system)
        except RuntimeError as exc:
            raise NearSpectrumError(f"singular factorization {label}: {exc}") from exc

    @classmethod
    def at(cls, positive: sp.spmatrix, z: complex) -> "ResolventFactorization":
        """Factor zI − P."""
        n = positive.shape[0]
        return cls(z * sp.identity(n, dtype=complex, format="csc") - positive, label=f"at z = {z:.6g}")

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return self._lu.solve(np.asarray(rhs, dtype=complex))

    def solve_adjoint(self, rhs: np.ndarray) -> np.ndarray:
        return self._lu.solve(np.asarray(rhs, dtype=complex), trans="H")

    def checked_solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve and reject results whose normwise backward error exceeds the tolerance.

        The backward error ‖r‖∞ / (‖S‖∞‖u‖∞ + ‖f‖∞) scales with the
        1/w² rows of graded grids, the bare residual does not.
        """
        rhs = np.asarray(rhs, dtype=complex)
        u = self.solve(rhs)
        if not np.all(np.isfinite(u)):
            raise NearSpectrumError(f"non-finite resolvent solution {self.label}")
        residual = float(np.max(np.abs(self.system @ u - rhs), initial=0.0))
        scale = self.norm_inf * float(np.max(np.abs(u), initial=0.0)) + float(
            np.max(np.abs(rhs), initial=0.0)
        )
        backward = residual / scale if scale > 0 else 0.0
        if backward > RESIDUAL_TOL:
            raise NumericalError(
                f"backward error {backward:.3e} exceeds {RESIDUAL_TOL:g} {self.label}",
                code=ErrorCode.RESIDUAL_TOO_LARGE,
            )
        return u


def resolvent_solve(A: DiscreteOperator, lam: complex, f: GridFunction) -> GridFunction:
    """Solve (λ − A)u = f."""
    n = A.size
    system = lam * sp.identity(n, dtype=complex, format="csr") - A.matrix
    fact = ResolventFactorization(system, label=f"at λ = {lam:.6g}")
    return GridFunction(A.grid, fact.checked_solve(f.flat))


def elliptic_regularity_ratio(
    A: DiscreteOperator, lam: complex, f: GridFunction, k_spec: NormSpec
) -> float:
    """‖u‖_{W^{k+2,p}} / ‖f‖_{W^{k,p}} for u = (λ − A)⁻¹f; 0 when f = 0."""
    denominator = sobolev_norm(f, k_spec)
    if denominator == 0.0:
        return 0.0
    u = resolvent_solve(A, lam, f)
    return sobolev_norm(u, k_spec.with_order(k_spec.k + 2)) / denominator


# =============================================================================
# Operator norms
# =============================================================================


class NormEstimate(NamedTuple):
    value: float
    iterations: int
    converged: bool


class GramNorm:
    """The p = 2 Sobolev norm as ‖x‖² = xᴴGx with G = Σ_α D_αᵀ Ω D_α."""

    def __init__(self, grid: HalfSpaceGrid, spec: NormSpec) -> None:
        omega = sp.diags(grid.measure(spec.gamma).ravel())
        gram = sp.csr_matrix((grid.size, grid.size))
        for order in range(spec.k + 1):
            for alpha in multi_indices(order, grid.dim):
                D = grid.derivative_matrix(alpha)
                gram = gram + D.T @ omega @ D
        self.gram = sp.csc_matrix(gram)
        self._diagonal = spec.k == 0
        self._lu = None if self._diagonal else splu(self.gram.astype(complex))

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.gram @ x

    def solve(self, x: np.ndarray) -> np.ndarray:
        if self._diagonal:
            return x / self.gram.diagonal()
        return self._lu.solve(np.asarray(x, dtype=complex))

    def norm(self, x: np.ndarray) -> float:
        return float(np.sqrt(max(np.real(np.vdot(x, self.gram @ x)), 0.0)))


def operator_norm(
    apply: Callable[[np.ndarray], np.ndarray],
    apply_adjoint: Callable[[np.ndarray], np.ndarray],
    grid: HalfSpaceGrid,
    spec: NormSpec,
    rng: np.random.Generator,
    max_iter: int = POWER_ITERATIONS,
    tol: float = POWER_TOL,
    probes: int = NORM_PROBES,
    gram: GramNorm | None = None,
) -> NormEstimate:
    """Estimate ‖M‖ in W^{k,p}(w_γ).

    p = 2 runs power iteration on G⁻¹MᴴGM; the Rayleigh values only grow,
    so every iterate is a lower bound. Other p take the best of random
    complex Gaussian probes, also a lower bound.
    """
    n = grid.size
    if spec.p != 2:
        best = 0.0
        for _ in range(probes):
            v = complex_gaussian(rng, (n,))
            best = max(best, sobolev_norm_vector(grid, apply(v), spec) / sobolev_norm_vector(grid, v, spec))
        return NormEstimate(best, probes, True)

    gram = gram or GramNorm(grid, spec)
    v = complex_gaussian(rng, (n,))
    v /= gram.norm(v)
    estimate = 0.0
    for iteration in range(1, max_iter + 1):
        w = apply(v)
        value = gram.norm(w)
        if abs(value - estimate) <= tol * value:
            return NormEstimate(max(value, estimate), iteration, True)
        estimate = max(value, estimate)
        v = gram.solve(apply_adjoint(gram.apply(w)))
        size = gram.norm(v)
        if size == 0.0:
            return NormEstimate(estimate, iteration, True)
        v /= size
    logger.warning("Power iteration hit %d iterations (estimate %.4g)", max_iter, estimate)
    return NormEstimate(estimate, max_iter, False)


# =============================================================================
# Sectoriality
# =============================================================================


class ScanRow(NamedTuple):
    theta: float
    r: float
    norm_estimate: float
    iterations: int
    flag: str


@dataclass(frozen=True)
class ScanResult:
    rows: list[ScanRow]
    suprema: dict[float, float]


def sectoriality_scan(
    A: DiscreteOperator,
    mu: float,
    angles: list[float],
    radii: list[float],
    norm_spec: NormSpec,
    seed: int = 0,
    executor: Executor | None = None,
    max_iter: int = POWER_ITERATIONS,
    tol: float = POWER_TOL,
) -> ScanResult:
    """‖λR(λ, μ − A)‖ on the rays λ = r·e^{iθ}.

    Each λ gets its own random substream, so the table does not depend
    on the executor or its thread count.
    """
    if mu <= 0:
        raise ParameterError(f"sectoriality scans need μ > 0, got {mu}")
    for theta in angles:
        if not 0 < theta <= np.pi:
            raise ParameterError(f"angle {theta} outside (0, π]")
    positive = A.shifted(mu)
    gram = GramNorm(A.grid, norm_spec) if norm_spec.p == 2 else None
    points = [(theta, r) for theta in angles for r in radii]

    def scan_one(index: int) -> ScanRow:
        theta, r = points[index]
        lam = r * np.exp(1j * theta)
        try:
            fact = ResolventFactorization.at(positive, lam)
        except NearSpectrumError:
            logger.warning("λ = %.4g·e^{%.4gi} is numerically in the spectrum", r, theta)
            return ScanRow(theta, r, float("nan"), 0, "near_spectrum")
        estimate = operator_norm(
            lambda x: lam * fact.solve(x),
            lambda x: np.conj(lam) * fact.solve_adjoint(x),
            A.grid,
            norm_spec,
            substream(seed, index),
            max_iter=max_iter,
            tol=tol,
            gram=gram,
        )
        flag = "ok" if estimate.converged else "max_iter"
        return ScanRow(theta, r, estimate.value, estimate.iterations, flag)

    indices = range(len(points))
    rows = list(executor.map(scan_one, indices)) if executor else [scan_one(i) for i in indices]
    suprema: dict[float, float] = {}
    for theta in angles:
        values = [row.norm_estimate for row in rows if row.theta == theta and row.flag != "near_spectrum"]
        suprema[theta] = max(values) if values else float("nan")
    logger.info("Sectoriality scan over %d points: suprema %s", len(rows), suprema)
    return ScanResult(rows=rows, suprema=suprema)


# =============================================================================
# Perturbation bounds and spectra
# =============================================================================


def perturbation_ratio(
    B: DiscreteOperator,
    A: DiscreteOperator,
    trial_functions: list[GridFunction],
    norm_spec: NormSpec,
) -> float:
    """η = max over trials of ‖Bu‖ / ‖(μ − A)u‖ in W^{k,p}(w_γ).

    Raises:
        TraceViolationError: if a trial violates a trace condition of A's domain.
    """
    positive = A.shifted()
    eta = 0.0
    for u in trial_functions:
        check_traces(u, norm_spec, A.bc, extra_order=2)
        denominator = sobolev_norm_vector(A.grid, positive @ u.flat, norm_spec)
        if denominator == 0.0:
            continue
        eta = max(eta, sobolev_norm_vector(A.grid, B.matrix @ u.flat, norm_spec) / denominator)
    return eta


class RitzReport(NamedTuple):
    values: np.ndarray
    max_imag: float


def ritz_values(A: DiscreteOperator, steps: int = 50, seed: int = 0) -> RitzReport:
    """Ritz values of μ − A from Lanczos in the cell-width inner product.

    Full reorthogonalization; the imaginary parts of the projected matrix's
    eigenvalues measure the departure from self-adjointness.
    """
    positive = A.shifted()
    weights = A.grid.measure(0.0).ravel()
    n = A.size
    steps = min(steps, n)
    rng = substream(seed, 0)

    def inner(x: np.ndarray, y: np.ndarray) -> complex:
        return complex(np.vdot(y, weights * x))

    basis = np.zeros((n, steps), dtype=complex)
    q = rng.standard_normal(n).astype(complex)
    q /= np.sqrt(inner(q, q).real)
    for j in range(steps):
        basis[:, j] = q
        w = positive @ q
        for _ in range(2):
            coeffs = basis[:, : j + 1].conj().T @ (weights * w)
            w = w - basis[:, : j + 1] @ coeffs
        size = np.sqrt(inner(w, w).real)
        if size < 1e-12:
            basis = basis[:, : j + 1]
            break
        q = w / size
    projected = basis.conj().T @ (weights[:, None] * (positive @ basis))
    values = eigvals(projected)
    order = np.argsort(values.real)
    return RitzReport(values=values[order], max_imag=float(np.max(np.abs(values.imag))))
