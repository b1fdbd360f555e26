"""Backward-Euler heat flow and discrete maximal L^q(v)-regularity ratios."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from src.core.errors import ParameterError
from src.core.output import write_csv
from src.core.types import NormSpec, TimeGridSpec
from src.numerics.operators import DiscreteOperator, ResolventFactorization
from src.numerics.spaces import sobolev_norm_vector

logger = logging.getLogger(__name__)

Forcing = Callable[[float], np.ndarray] | np.ndarray


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Nodes 0 = t₀ < … < t_N = T and the weight v(t) = t^a."""

    spec: TimeGridSpec
    nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        spec = self.spec
        if spec.grading == "uniform":
            steps = np.full(spec.steps, spec.T / spec.steps)
        else:
            # step n grows like ratio^{N−n}, refined toward t = 0
            raw = spec.ratio ** np.arange(spec.steps - 1, -1, -1, dtype=float)
            steps = spec.T * raw / raw.sum()
        nodes = np.concatenate([[0.0], np.cumsum(steps)])
        nodes[-1] = spec.T
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def from_spec(cls, spec: TimeGridSpec) -> "TimeGrid":
        return cls(spec=spec)

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def count(self) -> int:
        return len(self.nodes) - 1

    def refined(self) -> "TimeGrid":
        return TimeGrid(self.spec.refined())

    def weights(self) -> np.ndarray:
        """∫ t^a over each step: exact on the first, midpoint afterwards."""
        a = self.spec.a
        tau = self.steps
        mid = 0.5 * (self.nodes[:-1] + self.nodes[1:])
        weights = tau * mid**a
        weights[0] = tau[0] ** (a + 1) / (a + 1)
        return weights


@dataclass(frozen=True, eq=False)
class Trajectory:
    """u_n at t_n for n = 0..N (u₀ = 0), flattened node values per row."""

    times: np.ndarray
    values: np.ndarray

    def to_csv(self, path: Path) -> Path:
        rows = (
            [float(t), node, float(v.real), float(v.imag)]
            for t, row in zip(self.times, self.values)
            for node, v in enumerate(row)
        )
        return write_csv(path, ["t", "node_id", "re", "im"], rows)


def _forcing_values(f: Forcing, tg: TimeGrid, size: int) -> np.ndarray:
    """f_n at t_1..t_N, shape (N, size)."""
    if callable(f):
        values = np.array([np.asarray(f(t), dtype=complex).ravel() for t in tg.nodes[1:]])
    else:
        values = np.asarray(f, dtype=complex).reshape(tg.count, -1)
    if values.shape != (tg.count, size):
        raise ParameterError(f"forcing has shape {values.shape}, expected {(tg.count, size)}")
    return values


def heat_solve(A: DiscreteOperator, f: Forcing, tg: TimeGrid, mu: float | None = None) -> Trajectory:
    """Backward Euler for ∂ₜu + (μ − M)u = f, u(0) = 0.

    Each step solves (I/τₙ + μ − M)uₙ = uₙ₋₁/τₙ + fₙ; factorizations are
    reused across steps of equal length.
    """
    positive = A.shifted(mu)
    n = A.size
    forcing = _forcing_values(f, tg, n)
    values = np.zeros((tg.count + 1, n), dtype=complex)
    factors: dict[float, ResolventFactorization] = {}
    for step, tau in enumerate(tg.steps, start=1):
        key = round(float(tau), 15)
        if key not in factors:
            factors[key] = ResolventFactorization.at(-positive, 1.0 / tau)
        values[step] = factors[key].solve(values[step - 1] / tau + forcing[step - 1])
    logger.debug("Heat solve: %d steps, %d factorizations", tg.count, len(factors))
    return Trajectory(times=tg.nodes.copy(), values=values)


def _temporal_norm(grid, rows: np.ndarray, weights: np.ndarray, q: float, spec: NormSpec) -> float:
    spatial = np.array([sobolev_norm_vector(grid, row, spec) for row in rows])
    return float(np.sum(weights * spatial**q) ** (1.0 / q))


def max_reg_ratio(
    A: DiscreteOperator,
    f: Forcing,
    tg: TimeGrid,
    spatial_norm_spec: NormSpec,
    mu: float | None = None,
) -> float:
    """(‖∂ₜu‖ + ‖(μ − M)u‖) / ‖f‖ in L^q(v; W^{k,p}(w_γ)); 0 when f = 0."""
    forcing = _forcing_values(f, tg, A.size)
    weights = tg.weights()
    q = tg.spec.q
    denominator = _temporal_norm(A.grid, forcing, weights, q, spatial_norm_spec)
    if denominator == 0.0:
        return 0.0
    trajectory = heat_solve(A, forcing, tg, mu)
    u = trajectory.values
    derivative = (u[1:] - u[:-1]) / tg.steps[:, None]
    positive = A.shifted(mu)
    applied = np.asarray((positive @ u[1:].T).T)
    numerator = _temporal_norm(A.grid, derivative, weights, q, spatial_norm_spec) + _temporal_norm(
        A.grid, applied, weights, q, spatial_norm_spec
    )
    ratio = numerator / denominator
    logger.debug("Maximal regularity ratio %.4f (q=%g, a=%g)", ratio, q, tg.spec.a)
    return ratio

