"""Mollifiers η on ℝ and ϕ on ℝ^{d−1} with their quadrature rules.

Both are built from the standard bump B(σ) = exp(−1/(1−σ²)) on (−1, 1),
rescaled per axis. η has half-width 1/√2; ϕ is a tensor product with
per-axis half-width 1/√(2m), so its support box sits inside the ball of
radius 1/√2 and φ = η⊗ϕ is supported in the unit ball.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.legendre import leggauss

MAX_KERNEL_ORDER = 8

_Q = Polynomial([1.0, 0.0, -1.0])  # q(σ) = 1 − σ²
_DQ = _Q.deriv()


def _bump_derivative_polynomials(order: int) -> list[Polynomial]:
    """P_n with B^{(n)} = P_n / q^{2n} · B."""
    polys = [Polynomial([1.0])]
    for n in range(order):
        p = polys[-1]
        polys.append((p.deriv() * _Q - 2 * n * p * _DQ) * _Q + p * _DQ)
    return polys


_BUMP_POLYS = _bump_derivative_polynomials(MAX_KERNEL_ORDER)


def bump_derivative(sigma: np.ndarray, n: int = 0) -> np.ndarray:
    """n-th derivative of B(σ) = exp(−1/(1−σ²)), zero outside (−1, 1)."""
    sigma = np.asarray(sigma, dtype=float)
    out = np.zeros_like(sigma)
    inside = np.abs(sigma) < 1.0
    s = sigma[inside]
    q = 1.0 - s**2
    out[inside] = _BUMP_POLYS[n](s) * np.exp(-1.0 / q - 2 * n * np.log(q))
    return out


@dataclass(frozen=True, eq=False)
class MollifierSpec:
    """η, ϕ and the tensor Gauss–Legendre rule over the support of ϕ.

    Attributes:
        dim: space dimension d (ϕ lives on ℝ^{d−1})
        order: Gauss–Legendre nodes per axis
    """

    dim: int
    order: int = 96
    eta_half_width: float = field(init=False)
    phi_half_width: float = field(init=False)
    eta_scale: float = field(init=False)
    phi_scale: float = field(init=False)
    axis_nodes: np.ndarray = field(init=False, repr=False)
    axis_weights: np.ndarray = field(init=False, repr=False)
    lateral_nodes: np.ndarray = field(init=False, repr=False)
    lateral_weights: np.ndarray = field(init=False, repr=False)
    _axis_index: np.ndarray = field(init=False, repr=False)
    _axis_derivs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        m = self.dim - 1
        set_ = object.__setattr__
        set_(self, "eta_half_width", 1.0 / math.sqrt(2.0))
        set_(self, "phi_half_width", 1.0 / math.sqrt(2.0 * m))

        x, w = leggauss(self.order)
        # normalize each 1-D profile with the rule it is integrated with
        eta_mass = self.eta_half_width * float(w @ bump_derivative(x))
        set_(self, "eta_scale", 1.0 / eta_mass)
        a = self.phi_half_width
        phi_mass_1d = a * float(w @ bump_derivative(x))
        set_(self, "phi_scale", 1.0 / phi_mass_1d)

        set_(self, "axis_nodes", a * x)
        set_(self, "axis_weights", a * w)
        # ∂^n of the 1-D lateral factor at the axis nodes
        derivs = np.stack(
            [self.phi_scale * a**-n * bump_derivative(x, n) for n in range(MAX_KERNEL_ORDER + 1)]
        )
        set_(self, "_axis_derivs", derivs)

        index = np.array(list(itertools.product(range(self.order), repeat=m)), dtype=int)
        set_(self, "_axis_index", index)
        set_(self, "lateral_nodes", self.axis_nodes[index])
        set_(self, "lateral_weights", np.prod(self.axis_weights[index], axis=1))

    @property
    def lateral_dim(self) -> int:
        return self.dim - 1

    def eta(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.eta_scale * bump_derivative(t / self.eta_half_width)

    def phi(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        factors = self.phi_scale * bump_derivative(z / self.phi_half_width)
        return np.prod(factors, axis=-1)

    def eta_mass(self) -> float:
        x, w = leggauss(self.order)
        h = self.eta_half_width
        return float(h * w @ self.eta(h * x))

    def phi_mass(self) -> float:
        return float(self.lateral_weights @ self.phi(self.lateral_nodes))

    def kernel_weights(self, a: tuple[int, ...], b: tuple[int, ...]) -> np.ndarray:
        """Quadrature weights times u^a ∂^b ϕ(u) at the lateral nodes."""
        values = self.lateral_weights.copy()
        for i, (ai, bi) in enumerate(zip(a, b)):
            if bi > MAX_KERNEL_ORDER:
                raise ValueError(f"kernel derivative order {bi} exceeds {MAX_KERNEL_ORDER}")
            column = self._axis_index[:, i]
            values *= self.axis_nodes[column] ** ai * self._axis_derivs[bi][column]
        return values
