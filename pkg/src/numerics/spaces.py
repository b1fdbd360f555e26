"""Graded half-space grids, weighted norms, traces and Hardy checks.

The normal axis (0, X_max] is split into cells whose widths grow
geometrically from x1_min until they reach max_width; nodes sit at cell
midpoints, so no node touches x₁ = 0. The lateral axis (d = 2) is a
periodic grid on [−Λ, Λ). Grid functions hold complex values shaped
``(n1,)`` for d = 1 and ``(n1, n_lat)`` for d = 2; flattened vectors use
row-major order.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import RegularGridInterpolator

from src.core.errors import ParameterError, TraceViolationError
from src.core.output import read_csv, write_csv
from src.core.types import BoundaryCondition, GridSpec, NormSpec
from src.numerics.geometry import PullbackMap, psi, psi_inverse

logger = logging.getLogger(__name__)

MIN_NODES = 16
MAX_SOBOLEV_ORDER = 4
TRACE_TOL = 1e-6


# =============================================================================
# Finite-difference weights
# =============================================================================


def fornberg_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Weights for derivatives 0..m at z from values at nodes x.

    Column k of the result holds the weights of the k-th derivative.
    """
    n = len(x)
    c = np.zeros((n, m + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = x[0] - z
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


# =============================================================================
# Grid
# =============================================================================


def _normal_widths(spec: GridSpec) -> np.ndarray:
    widths = [spec.x1_min]
    edge = spec.x1_min
    while widths[-1] / spec.grading < spec.max_width:
        nxt = widths[-1] / spec.grading
        if edge + nxt >= spec.x_max:
            break
        widths.append(nxt)
        edge += nxt
    remaining = spec.x_max - edge
    n_uniform = max(1, math.ceil(remaining / spec.max_width - 1e-9))
    widths.extend([remaining / n_uniform] * n_uniform)
    return np.asarray(widths)


@dataclass(frozen=True, eq=False)
class HalfSpaceGrid:
    """Tensor grid of the truncated half-space (0, X_max] × [−Λ, Λ)^{d−1}."""

    spec: GridSpec
    normal_edges: np.ndarray = field(init=False, repr=False)
    normal_nodes: np.ndarray = field(init=False, repr=False)
    normal_widths: np.ndarray = field(init=False, repr=False)
    lateral_nodes: np.ndarray = field(init=False, repr=False)
    lateral_spacing: float = field(init=False)
    _cache: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self) -> None:
        set_ = object.__setattr__
        widths = _normal_widths(self.spec)
        if len(widths) < MIN_NODES:
            raise ParameterError(
                f"grid has {len(widths)} normal nodes, at least {MIN_NODES} are required"
            )
        edges = np.concatenate([[0.0], np.cumsum(widths)])
        edges[-1] = self.spec.x_max
        set_(self, "normal_edges", edges)
        set_(self, "normal_widths", np.diff(edges))
        set_(self, "normal_nodes", 0.5 * (edges[:-1] + edges[1:]))
        if self.spec.dim == 2:
            n = self.spec.n_lateral
            h = 2.0 * self.spec.lateral_half_width / n
            set_(self, "lateral_spacing", h)
            set_(self, "lateral_nodes", -self.spec.lateral_half_width + h * np.arange(n))
        else:
            set_(self, "lateral_spacing", 1.0)
            set_(self, "lateral_nodes", np.zeros(0))
        logger.debug("Grid %s with %d nodes", self.shape, self.size)

    @classmethod
    def from_spec(cls, spec: GridSpec) -> "HalfSpaceGrid":
        return cls(spec=spec)

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def n1(self) -> int:
        return len(self.normal_nodes)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n1,) if self.dim == 1 else (self.n1, len(self.lateral_nodes))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def refined(self) -> "HalfSpaceGrid":
        return HalfSpaceGrid(self.spec.refined())

    def points(self) -> np.ndarray:
        """Node coordinates, shape (size, d), row-major."""
        if self.dim == 1:
            return self.normal_nodes[:, None].copy()
        x1, x2 = np.meshgrid(self.normal_nodes, self.lateral_nodes, indexing="ij")
        return np.column_stack([x1.ravel(), x2.ravel()])

    def normal_weights(self, gamma: float) -> np.ndarray:
        """∫_cell x₁^γ dx₁ per normal cell.

        Every cell is integrated exactly, the first one only when γ > −1; for
        γ ≤ −1 it falls back to the midpoint rule.
        """
        key = ("normal_weights", float(gamma))
        if key not in self._cache:
            weights = self.normal_widths * self.normal_nodes**gamma
            s = gamma + 1
            lo = self.normal_edges[1:-1]
            log_ratio = np.log1p(self.normal_widths[1:] / lo)
            # a^s(e^{s log(b/a)} − 1)/s, stable for s near 0
            weights[1:] = log_ratio if s == 0 else lo**s * np.expm1(s * log_ratio) / s
            if gamma > -1:
                weights[0] = self.normal_edges[1] ** (gamma + 1) / (gamma + 1)
            self._cache[key] = weights
        return self._cache[key]

    def measure(self, gamma: float) -> np.ndarray:
        """Discrete weighted measure x₁^γ dx per node, shaped like grid values."""
        weights = self.normal_weights(gamma)
        if self.dim == 1:
            return weights
        return np.outer(weights, np.full(len(self.lateral_nodes), self.lateral_spacing))

    def normal_derivative_matrix(self, order: int) -> sp.csr_matrix:
        """Fornberg stencils of k+2 nodes (3 for k = 1), centered where possible."""
        key = ("normal_derivative", order)
        if key not in self._cache:
            n = self.n1
            if order == 0:
                matrix = sp.identity(n, format="csr")
            else:
                width = 3 if order == 1 else order + 2
                rows, cols, vals = [], [], []
                for i in range(n):
                    start = min(max(i - width // 2, 0), n - width)
                    window = np.arange(start, start + width)
                    w = fornberg_weights(self.normal_nodes[i], self.normal_nodes[window], order)
                    rows.extend([i] * width)
                    cols.extend(window.tolist())
                    vals.extend(w[:, order].tolist())
                matrix = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
            self._cache[key] = matrix
        return self._cache[key]

    def lateral_symbol(self, order: int) -> np.ndarray:
        n = len(self.lateral_nodes)
        xi = 2.0 * np.pi * np.fft.fftfreq(n, d=self.lateral_spacing)
        symbol = (1j * xi) ** order
        if order % 2 and n % 2 == 0:
            symbol[n // 2] = 0.0
        return symbol

    def lateral_derivative_matrix(self, order: int) -> np.ndarray:
        """Dense spectral differentiation matrix of the periodic lateral grid."""
        key = ("lateral_derivative", order)
        if key not in self._cache:
            n = len(self.lateral_nodes)
            eye = np.eye(n)
            spectral = np.fft.ifft(np.fft.fft(eye, axis=0) * self.lateral_symbol(order)[:, None], axis=0)
            self._cache[key] = spectral.real
        return self._cache[key]

    def derivative_matrix(self, alpha: tuple[int, ...]) -> sp.csr_matrix:
        """∂^α on flattened grid vectors."""
        normal = self.normal_derivative_matrix(alpha[0])
        if self.dim == 1:
            return normal
        lateral = sp.csr_matrix(self.lateral_derivative_matrix(alpha[1]))
        return sp.kron(normal, lateral, format="csr")


def build_grid(spec: GridSpec) -> HalfSpaceGrid:
    return HalfSpaceGrid.from_spec(spec)


# =============================================================================
# Grid functions
# =============================================================================


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Complex node values on a HalfSpaceGrid."""

    grid: HalfSpaceGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=complex)
        if values.size != self.grid.size:
            raise ParameterError(
                f"grid function has {values.size} values, grid has {self.grid.size} nodes"
            )
        values = values.reshape(self.grid.shape)
        if not np.all(np.isfinite(values)):
            raise ParameterError("grid function has non-finite values")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, grid: HalfSpaceGrid, f: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        """Sample f at the grid nodes; f maps (N, d) points to N values."""
        return cls(grid, np.asarray(f(grid.points())))

    @classmethod
    def zeros(cls, grid: HalfSpaceGrid) -> "GridFunction":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.grid, values)

    def to_csv(self, path: Path) -> Path:
        """Export with columns x1[, x2], re, im."""
        pts = self.grid.points()
        header = [f"x{i + 1}" for i in range(self.grid.dim)] + ["re", "im"]
        rows = (
            [*map(float, point), float(v.real), float(v.imag)]
            for point, v in zip(pts, self.flat)
        )
        return write_csv(path, header, rows)

    @classmethod
    def from_csv(cls, grid: HalfSpaceGrid, path: Path) -> "GridFunction":
        header, rows = read_csv(path)
        re, im = header.index("re"), header.index("im")
        values = np.array([float(row[re]) + 1j * float(row[im]) for row in rows])
        return cls(grid, values)


def write_grid_sidecar(grid: HalfSpaceGrid, path: Path) -> Path:
    """Node coordinates and unweighted cell volumes."""
    pts = grid.points()
    weights = grid.measure(0.0).ravel()
    header = [f"x{i + 1}" for i in range(grid.dim)] + ["weight"]
    return write_csv(path, header, ([*map(float, p), float(w)] for p, w in zip(pts, weights)))


def derivative(f: GridFunction, alpha: tuple[int, ...]) -> np.ndarray:
    """Finite-difference ∂^α f: nonuniform stencils in x₁, spectral laterally."""
    grid = f.grid
    out = grid.normal_derivative_matrix(alpha[0]) @ f.values
    if grid.dim == 2 and alpha[1]:
        out = np.fft.ifft(np.fft.fft(out, axis=1) * grid.lateral_symbol(alpha[1]), axis=1)
    return out


def multi_indices(order: int, dim: int) -> list[tuple[int, ...]]:
    if dim == 1:
        return [(order,)]
    return [(order - j, j) for j in range(order + 1)]


# =============================================================================
# Norms
# =============================================================================


def _lp(grid: HalfSpaceGrid, values: np.ndarray, p: float, gamma: float) -> float:
    return float(np.sum(grid.measure(gamma) * np.abs(values) ** p) ** (1.0 / p))


def lp_norm(f: GridFunction, p: float, gamma: float) -> float:
    """(Σ wᵢ x₁ᵢ^γ |fᵢ|^p)^{1/p}."""
    if p <= 1:
        raise ParameterError(f"p must exceed 1, got {p}")
    return _lp(f.grid, f.values, p, gamma)


def _check_order(grid: HalfSpaceGrid, k: int) -> None:
    if k > MAX_SOBOLEV_ORDER:
        raise ParameterError(f"Sobolev order {k} exceeds the supported maximum {MAX_SOBOLEV_ORDER}")
    if grid.n1 < 2 * k + 3:
        raise ParameterError(f"{grid.n1} normal nodes cannot support order-{k} stencils")


def _sobolev(f: GridFunction, k: int, p: float, gamma: float) -> float:
    _check_order(f.grid, k)
    total = 0.0
    for order in range(k + 1):
        for alpha in multi_indices(order, f.grid.dim):
            total += _lp(f.grid, derivative(f, alpha), p, gamma) ** p
    return total ** (1.0 / p)


def sobolev_norm(f: GridFunction, spec: NormSpec) -> float:
    """(Σ_{|α|≤k} ‖∂^α f‖_{L^p(w_γ)}^p)^{1/p}."""
    return _sobolev(f, spec.k, spec.p, spec.gamma)


def sobolev_norm_vector(grid: HalfSpaceGrid, vector: np.ndarray, spec: NormSpec) -> float:
    """sobolev_norm of a flattened value vector."""
    return sobolev_norm(GridFunction(grid, vector), spec)


# =============================================================================
# Traces
# =============================================================================


def _extrapolation_weights(grid: HalfSpaceGrid, order: int) -> np.ndarray:
    if grid.n1 < 3:
        raise ParameterError("traces need at least 3 normal layers")
    return fornberg_weights(0.0, grid.normal_nodes[:3], 1)[:, order]


def trace_eval(f: GridFunction) -> np.ndarray:
    """f at x₁ = 0 by quadratic extrapolation from the first three layers."""
    return _extrapolation_weights(f.grid, 0) @ f.values[:3]


def normal_trace_eval(f: GridFunction) -> np.ndarray:
    """∂₁f at x₁ = 0 from the same quadratic."""
    return _extrapolation_weights(f.grid, 1) @ f.values[:3]


def required_traces(spec: NormSpec, bc: BoundaryCondition) -> tuple[str, ...]:
    """Traces that must vanish in W^{k,p}_{bc}(w_γ)."""
    return _trace_conditions(spec.k, spec.p, spec.gamma, bc)


def _trace_conditions(k: int, p: float, gamma: float, bc: BoundaryCondition) -> tuple[str, ...]:
    threshold = (gamma + 1) / p
    if bc == BoundaryCondition.DIRICHLET:
        return ("trace",) if k > threshold else ()
    return ("normal_trace",) if k - 1 > threshold else ()


def check_traces(
    f: GridFunction, spec: NormSpec, bc: BoundaryCondition, extra_order: int = 0
) -> None:
    """Raise TraceViolationError if a trace required at order k + extra_order exceeds TRACE_TOL·max|f|."""
    scale = float(np.max(np.abs(f.values)))
    for name in _trace_conditions(spec.k + extra_order, spec.p, spec.gamma, bc):
        trace = trace_eval(f) if name == "trace" else normal_trace_eval(f)
        size = float(np.max(np.abs(trace)))
        if size > TRACE_TOL * max(scale, 1e-300):
            raise TraceViolationError(f"{name} of size {size:.3e} violates the {bc.value} condition")


# =============================================================================
# Hardy inequalities and embeddings
# =============================================================================


class HardyReport(NamedTuple):
    lhs: float
    rhs: float
    ratio: float
    case: str


def hardy_check(
    u: GridFunction, p: float, gamma: float, vanishing_trace: bool | None = None
) -> HardyReport:
    """‖u‖_{L^p(w_{γ−p})} against ‖u'‖_{L^p(w_γ)} on ℝ₊.

    Case (i), γ < p−1, needs u(0) = 0; case (ii), γ > p−1, needs nothing.
    ``vanishing_trace`` is the boundary flag: None infers the requirement
    from the case, True enforces u(0) = 0 in both cases, and False declares
    u(0) free, which case (i) rejects.
    """
    if u.grid.dim != 1:
        raise ParameterError("hardy_check works on one-dimensional grids")
    if p <= 1:
        raise ParameterError(f"p must exceed 1, got {p}")
    if abs(gamma - (p - 1)) < 1e-12:
        raise ParameterError(f"γ = p−1 excluded (γ={gamma}, p={p})")
    case = "i" if gamma < p - 1 else "ii"
    if case == "i" and vanishing_trace is False:
        raise ParameterError(
            f"Hardy case (i) (γ={gamma} < p−1={p - 1}) needs u(0) = 0, the flag declares it free"
        )
    if case == "i" or vanishing_trace:
        trace = abs(complex(trace_eval(u)))
        scale = lp_norm(u, p, gamma)
        if trace > TRACE_TOL * scale:
            raise TraceViolationError(
                f"Hardy case ({case}) needs u(0) = 0, trace is {trace:.3e} (‖u‖ = {scale:.3e})"
            )
    lhs = lp_norm(u, p, gamma - p)
    rhs = _lp(u.grid, derivative(u, (1,)), p, gamma)
    if rhs == 0.0:
        ratio = 0.0 if lhs == 0.0 else math.inf
    else:
        ratio = lhs / rhs
    return HardyReport(lhs=lhs, rhs=rhs, ratio=ratio, case=case)


def hardy_constant(p: float, gamma: float) -> float:
    """Sharp constant p/|p−1−γ| of the one-dimensional weighted Hardy inequality."""
    return p / abs(p - 1 - gamma)


def embedding_check(u: GridFunction, spec: NormSpec, s: int) -> tuple[float, float]:
    """(‖u‖_{L^p(w_{γ−sp})}, ‖u‖_{W^{k,p}(w_γ)}) for W^{k,p}(w_γ) ↪ L^p(w_{γ−sp})."""
    if spec.gamma <= s * spec.p - 1:
        raise ParameterError(f"embedding needs γ > sp−1 (γ={spec.gamma}, s={s}, p={spec.p})")
    if spec.k < s:
        raise ParameterError(f"embedding needs k ≥ s (k={spec.k}, s={s})")
    return lp_norm(u, spec.p, spec.gamma - s * spec.p), sobolev_norm(u, spec)


def hardy_embedding_check(u: GridFunction, spec: NormSpec) -> tuple[float, float]:
    """(‖u‖_{W^{k−1,p}(w_{γ−p})}, ‖u‖_{W^{k,p}(w_γ)})."""
    if spec.k < 1:
        raise ParameterError("the Hardy embedding needs k ≥ 1")
    if abs(spec.gamma - (spec.p - 1)) < 1e-12:
        raise ParameterError(f"γ = p−1 excluded (γ={spec.gamma}, p={spec.p})")
    return _sobolev(u, spec.k - 1, spec.p, spec.gamma - spec.p), sobolev_norm(u, spec)


# =============================================================================
# Spaces the Laplacian lives on
# =============================================================================


def laplacian_space(bc: BoundaryCondition, k: int, p: float, gamma: float) -> NormSpec:
    """W^{k,p}(w_{γ+kp}) for Dirichlet, W^{k,p}(w_{γ+(k−1)p}) for Neumann."""
    shift = k if bc == BoundaryCondition.DIRICHLET else k - 1
    try:
        return NormSpec(k=k, p=p, gamma=gamma + shift * p)
    except ValueError as exc:
        raise ParameterError(str(exc)) from exc


class Regime(NamedTuple):
    covered: bool
    reason: str


def theorem_regime(
    bc: BoundaryCondition, p: float, k: int, gamma: float, lam: float
) -> Regime:
    """Whether (p, k, γ, λ) lies where bounded H∞-calculus of μ − Δ is known."""
    threshold = 1 - (gamma + 1) / p
    if bc == BoundaryCondition.DIRICHLET:
        if not -1 < gamma < 2 * p - 1 or abs(gamma - (p - 1)) < 1e-12:
            return Regime(False, "γ outside (−1, 2p−1)∖{p−1}")
        if lam <= threshold:
            return Regime(False, f"λ must exceed 1−(γ+1)/p = {threshold:.4g}")
        return Regime(True, "Dirichlet regime")
    if p - 1 < gamma < 2 * p - 1:
        if lam > threshold + 1:
            return Regime(True, "Neumann regime, γ ∈ (p−1, 2p−1)")
        return Regime(False, f"λ must exceed 2−(γ+1)/p = {threshold + 1:.4g}")
    if -1 < gamma < p - 1:
        if k < 1:
            return Regime(False, "Neumann with γ < p−1 needs k ≥ 1")
        if lam <= threshold:
            return Regime(False, f"λ must exceed 1−(γ+1)/p = {threshold:.4g}")
        return Regime(True, "Neumann regime, γ ∈ (−1, p−1)")
    return Regime(False, "γ outside (−1, 2p−1)∖{p−1}")


# =============================================================================
# Pushforward and pull-back
# =============================================================================


def pushforward(
    f: Callable[[np.ndarray], np.ndarray], pullback: PullbackMap, grid: HalfSpaceGrid
) -> GridFunction:
    """(Ψ_*f)(y) = f(Ψ⁻¹(y)) at every grid node."""
    if grid.dim != pullback.dim:
        raise ParameterError(f"grid dimension {grid.dim} differs from domain dimension {pullback.dim}")
    domain_points = psi_inverse(pullback, grid.points())
    return GridFunction(grid, np.asarray(f(domain_points)))


def pull_back(values: GridFunction, pullback: PullbackMap, points: np.ndarray) -> np.ndarray:
    """Interpolate Ψ_*f at Ψ(x), recovering f(x) for domain points x."""
    grid = values.grid
    if grid.dim != 2 or pullback.dim != 2:
        raise ParameterError("pull_back needs a two-dimensional grid and domain")
    y = np.atleast_2d(psi(pullback, points))
    half = grid.spec.lateral_half_width
    lateral = np.append(grid.lateral_nodes, half)
    table = np.concatenate([values.values, values.values[:, :1]], axis=1)
    wrapped = np.column_stack([y[:, 0], (y[:, 1] + half) % (2 * half) - half])
    axes = (grid.normal_nodes, lateral)
    real = RegularGridInterpolator(axes, table.real, bounds_error=False, fill_value=None)
    imag = RegularGridInterpolator(axes, table.imag, bounds_error=False, fill_value=None)
    return real(wrapped) + 1j * imag(wrapped)
