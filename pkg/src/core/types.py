"""Domain types for flatcalc.

Parameter models shared by the numerical layers, the commands and the
configuration loader. Every model validates its own ranges so that a bad
configuration fails before any computation starts.
"""

import math
from enum import Enum
from typing import Annotated, Literal

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, field_validator, model_validator

# Tolerance for membership in the excluded weight set {jp − 1}
EXCLUDED_WEIGHT_TOL = 1e-12


class BoundaryCondition(str, Enum):
    """Boundary condition installed on the Laplacian."""

    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


class OperatorLabel(str, Enum):
    """What a discrete operator represents."""

    LAPLACIAN = "laplacian"
    B1 = "b1"
    B2 = "b2"
    B3 = "b3"
    PULLBACK_LAPLACIAN = "pullback_laplacian"
    PERTURBATION = "perturbation"


class ExperimentName(str, Enum):
    """Experiments runnable through 'flatcalc run'."""

    GEOMETRY_CHECK = "geometry-check"
    HARDY = "hardy"
    RESOLVENT_SCAN = "resolvent-scan"
    CALCULUS_BOUND = "calculus-bound"
    BIP_SWEEP = "bip-sweep"
    RIESZ = "riesz"
    HEAT_MR = "heat-mr"
    PERTURBATION_CURVE = "perturbation-curve"


def _split_floats(value: object) -> object:
    if isinstance(value, str):
        return [float(part) for part in value.replace(";", ",").split(",") if part.strip()]
    return value


FloatList = Annotated[list[float], BeforeValidator(_split_floats)]


class NormSpec(BaseModel):
    """Order, integrability and weight exponent of W^{k,p}(ℝ^d_+, w_γ)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    k: int = Field(default=0, ge=0, description="Sobolev order")
    p: float = Field(..., gt=1, description="Integrability exponent")
    gamma: float = Field(..., gt=-1, description="Power-weight exponent γ of x₁^γ")

    @model_validator(mode="after")
    def _not_excluded(self) -> "NormSpec":
        for j in range(1, self.k + 4):
            if abs(self.gamma - (j * self.p - 1)) < EXCLUDED_WEIGHT_TOL:
                label = "p−1" if j == 1 else f"{j}p−1"
                raise ValueError(f"γ = {label} excluded (γ={self.gamma}, p={self.p})")
        return self

    def with_order(self, k: int) -> "NormSpec":
        return NormSpec(k=k, p=self.p, gamma=self.gamma)


class GridSpec(BaseModel):
    """Truncated half-space grid: graded normal cells, periodic lateral nodes."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    dim: int = Field(default=1, ge=1, le=2, description="Space dimension d")
    x_max: float = Field(default=40.0, gt=0, description="Normal truncation X_max")
    x1_min: float = Field(default=1e-4, gt=0, description="Width of the first normal cell")
    grading: float = Field(default=0.85, gt=0.5, lt=1, description="Geometric grading ratio q")
    max_width: float = Field(default=0.1, gt=0, description="Uniform normal cell width")
    lateral_half_width: float = Field(default=4.0, gt=0, description="Lateral period half-width Λ")
    n_lateral: int = Field(default=32, ge=16, description="Lateral node count")

    @model_validator(mode="after")
    def _ordered_widths(self) -> "GridSpec":
        if not self.x1_min <= self.max_width < self.x_max:
            raise ValueError("need x1_min ≤ max_width < x_max")
        return self

    def refined(self) -> "GridSpec":
        """One dyadic refinement: halve both widths, take the square root of q."""
        return self.model_copy(
            update={
                "x1_min": self.x1_min / 2,
                "max_width": self.max_width / 2,
                "grading": math.sqrt(self.grading),
                "n_lateral": self.n_lateral * 2,
            }
        )


class BoundarySpec(BaseModel):
    """Catalog entry describing the boundary graph h."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: Literal["zero", "bump", "cone_smoothed"] = "zero"
    eps: float = Field(default=0.0, ge=0, description="Amplitude ε")
    radius: float = Field(default=1.0, gt=0, description="Support radius R")
    holder: float = Field(default=1.0, gt=0, le=1, description="Hölder exponent of the cone profile")
    dim: int = Field(default=2, ge=2, le=3, description="Space dimension d of the domain")

    def with_eps(self, eps: float) -> "BoundarySpec":
        return self.model_copy(update={"eps": eps})


class ContourSpec(BaseModel):
    """Two rays r·e^{±iν} with trapezoid nodes in log r."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    angle: float = Field(default=math.pi / 4, gt=0, lt=math.pi, description="Contour angle ν")
    r_min: float = Field(default=1e-8, gt=0)
    r_max: float = Field(default=1e12, gt=0)
    nodes_per_decade: int = Field(default=16, ge=2)

    @model_validator(mode="after")
    def _ordered_radii(self) -> "ContourSpec":
        if self.r_min >= self.r_max:
            raise ValueError("need r_min < r_max")
        return self

    def doubled(self) -> "ContourSpec":
        """Twice the node density on a truncation widened by two decades each side."""
        return self.model_copy(
            update={
                "r_min": self.r_min / 100,
                "r_max": self.r_max * 100,
                "nodes_per_decade": self.nodes_per_decade * 2,
            }
        )


class TimeGridSpec(BaseModel):
    """Time interval (0, T), step layout, and the power weight v(t) = t^a in L^q(v)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    T: float = Field(default=1.0, gt=0, description="Final time")
    steps: int = Field(default=32, ge=8)
    q: float = Field(default=2.0, gt=1, description="Temporal integrability exponent")
    a: float = Field(default=0.0, description="Temporal weight exponent")
    grading: Literal["uniform", "geometric"] = "uniform"
    ratio: float = Field(default=0.8, gt=0, lt=1, description="Step ratio for geometric grading")

    @model_validator(mode="after")
    def _muckenhoupt(self) -> "TimeGridSpec":
        if not -1 < self.a < self.q - 1:
            raise ValueError(f"a must lie in (−1, q−1) = (−1, {self.q - 1}) for t^a ∈ A_q")
        return self

    def refined(self) -> "TimeGridSpec":
        return self.model_copy(update={"steps": self.steps * 2})


class OperatorSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    bc: BoundaryCondition = BoundaryCondition.DIRICHLET
    mu: float = Field(default=1.0, ge=0, description="Shift μ in μ − Δ")


class SweepSpec(BaseModel):
    """Experiment-level sweep parameters ([experiment] section)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    eps_values: FloatList = Field(default_factory=lambda: [0.0125, 0.025, 0.05])
    s_values: FloatList = Field(default_factory=lambda: [float(s) for s in range(-5, 6)])
    angles: FloatList = Field(
        default_factory=lambda: [math.pi / 2, 3 * math.pi / 4, math.pi - 0.1]
    )
    radii_min: float = Field(default=1e-2, gt=0)
    radii_max: float = Field(default=1e4, gt=0)
    radii_count: int = Field(default=13, ge=2)
    refinements: int = Field(default=1, ge=0, le=3)
    alpha: list[int] = Field(default_factory=lambda: [2, 0])
    dyadic_depth: int = Field(default=8, ge=3)
    samples: int = Field(default=1000, ge=10)

    @field_validator("alpha", mode="before")
    @classmethod
    def _split_ints(cls, value: object) -> object:
        if isinstance(value, str):
            return [int(part) for part in value.split(",") if part.strip()]
        return value

    @field_validator("angles")
    @classmethod
    def _angles_in_range(cls, value: list[float]) -> list[float]:
        for theta in value:
            if not 0 < theta <= math.pi:
                raise ValueError(f"angle {theta} outside (0, π]")
        return value

    def radii(self) -> list[float]:
        ratio = (self.radii_max / self.radii_min) ** (1 / (self.radii_count - 1))
        return [self.radii_min * ratio**i for i in range(self.radii_count)]


class RunSpec(BaseModel):
    """Execution settings ([run] section, overridable from the CLI)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    seed: int = Field(default=0, ge=0)
    threads: int = Field(default=1, ge=1)
    output_dir: str = "results"
    probes: int = Field(default=4, ge=1)
