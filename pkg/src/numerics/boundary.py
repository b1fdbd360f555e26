"""Boundary graphs h: ℝ^{d−1} → ℝ and the boundary catalog.

All evaluators are vectorized: lateral points are arrays of shape
``(..., d−1)`` and values come back with shape ``(...)``.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from src.core.errors import ParameterError
from src.core.types import BoundarySpec

MultiIndex = tuple[int, ...]


@dataclass(frozen=True)
class BoundaryGraph(ABC):
    """Compactly supported C^{ℓ,λ} boundary function.

    Attributes:
        dim: space dimension d (the graph lives on ℝ^{d−1})
        smoothness: ℓ, the number of classical derivatives
        holder: λ, Hölder exponent of the ℓ-th derivatives
        support_radius: R, with h(x̃) = 0 for |x̃| > R
    """

    dim: int
    smoothness: int
    holder: float
    support_radius: float

    @property
    def lateral_dim(self) -> int:
        return self.dim - 1

    def eval(self, xt: np.ndarray) -> np.ndarray:
        return self.deriv((0,) * self.lateral_dim, xt)

    @abstractmethod
    def deriv(self, alpha: MultiIndex, xt: np.ndarray) -> np.ndarray:
        """∂^α h at lateral points ``xt``."""

    def _check(self, alpha: MultiIndex, xt: np.ndarray) -> np.ndarray:
        if len(alpha) != self.lateral_dim:
            raise ParameterError(f"multi-index {alpha} has wrong length for d={self.dim}")
        xt = np.asarray(xt, dtype=float)
        if xt.shape[-1] != self.lateral_dim:
            raise ParameterError(f"lateral points need trailing axis {self.lateral_dim}")
        return xt


@dataclass(frozen=True)
class ZeroBoundary(BoundaryGraph):
    """h ≡ 0: the half-space itself."""

    def deriv(self, alpha: MultiIndex, xt: np.ndarray) -> np.ndarray:
        xt = self._check(alpha, xt)
        return np.zeros(xt.shape[:-1])


@dataclass(frozen=True)
class BumpBoundary(BoundaryGraph):
    """h(x̃) = ε(1 − |x̃|²/R²)²₊, a C^{1,1} profile.

    Second derivatives are supplied away from the support sphere, where
    they jump.
    """

    eps: float = 0.0

    def deriv(self, alpha: MultiIndex, xt: np.ndarray) -> np.ndarray:
        xt = self._check(alpha, xt)
        order = sum(alpha)
        R2 = self.support_radius**2
        u = 1.0 - np.sum(xt**2, axis=-1) / R2
        inside = u > 0
        u = np.where(inside, u, 0.0)
        if order == 0:
            value = self.eps * u**2
        elif order == 1:
            j = alpha.index(1)
            value = -4.0 * self.eps * u * xt[..., j] / R2
        elif order == 2:
            idx = [i for i, a in enumerate(alpha) for _ in range(a)]
            j, k = idx
            delta = 1.0 if j == k else 0.0
            value = -4.0 * self.eps / R2 * (u * delta - 2.0 * xt[..., j] * xt[..., k] / R2)
        else:
            raise ParameterError(f"bump derivatives of order {order} are not available")
        return np.where(inside, value, 0.0)


def _transition(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    positive = t > 0
    out[positive] = np.exp(-1.0 / t[positive])
    return out


def _transition_prime(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    positive = t > 0
    out[positive] = np.exp(-1.0 / t[positive]) / t[positive] ** 2
    return out


def smooth_cutoff(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """χ(s) = 1 for s ≤ 1/2, 0 for s ≥ 1, C^∞ in between; returns (χ, χ')."""
    s = np.asarray(s, dtype=float)
    a = _transition(1.0 - s)
    b = _transition(s - 0.5)
    da = -_transition_prime(1.0 - s)
    db = _transition_prime(s - 0.5)
    total = a + b
    chi = a / total
    dchi = (da * b - a * db) / total**2
    return chi, dchi


@dataclass(frozen=True)
class ConeBoundary(BoundaryGraph):
    """h(x̃) = ε|x̃|^{1+λ}·χ(|x̃|/R), a C^{1,λ} profile with a tip at the origin."""

    eps: float = 0.0

    def deriv(self, alpha: MultiIndex, xt: np.ndarray) -> np.ndarray:
        xt = self._check(alpha, xt)
        order = sum(alpha)
        lam = self.holder
        r = np.sqrt(np.sum(xt**2, axis=-1))
        chi, dchi = smooth_cutoff(r / self.support_radius)
        if order == 0:
            return self.eps * r ** (1.0 + lam) * chi
        if order == 1:
            j = alpha.index(1)
            safe = np.where(r > 0, r, 1.0)
            radial = (1.0 + lam) * chi + r * dchi / self.support_radius
            value = self.eps * xt[..., j] * safe ** (lam - 1.0) * radial
            return np.where(r > 0, value, 0.0)
        raise ParameterError(f"cone derivatives of order {order} are not available")


def make_boundary(spec: BoundarySpec) -> BoundaryGraph:
    """Build a catalog boundary from its configuration entry."""
    if spec.name == "zero" or spec.eps == 0.0:
        return ZeroBoundary(dim=spec.dim, smoothness=4, holder=1.0, support_radius=spec.radius)
    if spec.name == "bump":
        return BumpBoundary(
            dim=spec.dim, smoothness=1, holder=1.0, support_radius=spec.radius, eps=spec.eps
        )
    if spec.name == "cone_smoothed":
        return ConeBoundary(
            dim=spec.dim,
            smoothness=1,
            holder=spec.holder,
            support_radius=spec.radius,
            eps=spec.eps,
        )
    raise ParameterError(f"unknown boundary '{spec.name}'")


def bump_slope_maximum(eps: float, radius: float = 1.0) -> float:
    """sup|h'| of the one-dimensional bump, attained at r = R/√3."""
    return 8.0 * eps / (3.0 * math.sqrt(3.0) * radius)
