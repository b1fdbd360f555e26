"""Experiment configuration loading.

Configuration files use ``[section]`` headers and ``key = value`` lines.
Every section maps onto one of the parameter models in
:mod:`src.core.types`; the whole file is validated before any numerical
work starts, and a violation names the offending field.
"""

import configparser
import logging
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.core.errors import ErrorCode, ParameterError
from src.core.types import (
    BoundarySpec,
    ContourSpec,
    ExperimentName,
    GridSpec,
    NormSpec,
    OperatorSpec,
    RunSpec,
    SweepSpec,
    TimeGridSpec,
)

logger = logging.getLogger(__name__)

SECTION_MODELS: dict[str, type[BaseModel]] = {
    "boundary": BoundarySpec,
    "grid": GridSpec,
    "norm": NormSpec,
    "operator": OperatorSpec,
    "contour": ContourSpec,
    "time": TimeGridSpec,
    "run": RunSpec,
}

# Sections each experiment cannot run without
REQUIRED_SECTIONS: dict[ExperimentName, tuple[str, ...]] = {
    ExperimentName.GEOMETRY_CHECK: ("boundary",),
    ExperimentName.HARDY: ("norm",),
    ExperimentName.RESOLVENT_SCAN: ("norm", "operator"),
    ExperimentName.CALCULUS_BOUND: ("norm", "operator", "contour"),
    ExperimentName.BIP_SWEEP: ("norm", "operator", "contour"),
    ExperimentName.RIESZ: ("norm",),
    ExperimentName.HEAT_MR: ("norm", "operator", "time"),
    ExperimentName.PERTURBATION_CURVE: ("boundary", "norm", "operator"),
}


class ExperimentConfig(BaseModel):
    """Fully resolved configuration for one run."""

    model_config = ConfigDict(frozen=True)

    experiment: ExperimentName
    boundary: BoundarySpec = Field(default_factory=BoundarySpec)
    grid: GridSpec = Field(default_factory=GridSpec)
    norm: NormSpec | None = None
    operator: OperatorSpec = Field(default_factory=OperatorSpec)
    contour: ContourSpec = Field(default_factory=ContourSpec)
    time: TimeGridSpec = Field(default_factory=TimeGridSpec)
    sweep: SweepSpec = Field(default_factory=SweepSpec)
    run: RunSpec = Field(default_factory=RunSpec)

    def with_overrides(
        self,
        output_dir: str | None = None,
        threads: int | None = None,
        seed: int | None = None,
    ) -> "ExperimentConfig":
        """Apply CLI overrides on top of the [run] section."""
        update = {
            key: value
            for key, value in {"output_dir": output_dir, "threads": threads, "seed": seed}.items()
            if value is not None
        }
        if not update:
            return self
        try:
            run = RunSpec(**{**self.run.model_dump(), **update})
        except ValidationError as exc:
            raise ParameterError(_describe(exc, "run")) from exc
        return self.model_copy(update={"run": run})


def _describe(exc: ValidationError, section: str) -> str:
    parts = []
    for item in exc.errors():
        loc = ".".join(str(piece) for piece in item["loc"])
        field = f"{section}.{loc}" if loc else section
        parts.append(f"{field}: {item['msg']}")
    return "; ".join(parts)


def _code_for(message: str) -> ErrorCode:
    if "excluded" in message:
        return ErrorCode.EXCLUDED_WEIGHT
    if "required" in message.lower() or "extra inputs" in message.lower():
        return ErrorCode.VALIDATION_ERROR
    return ErrorCode.PARAMETER_OUT_OF_RANGE


def _build_section(name: str, model: type[BaseModel], values: dict[str, Any]) -> BaseModel:
    try:
        return model(**values)
    except ValidationError as exc:
        message = _describe(exc, name)
        raise ParameterError(message, code=_code_for(message)) from exc


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    """Parse and validate configuration text.

    Raises:
        ParameterError: on syntax errors, unknown experiments, missing
            sections or fields, and out-of-range parameters.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str  # keys are case-sensitive (T in [time])
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ParameterError(
            f"{source}: {exc}", code=ErrorCode.CONFIG_PARSE_ERROR
        ) from exc

    if not parser.has_option("experiment", "name"):
        raise ParameterError(
            "experiment.name: Field required", code=ErrorCode.VALIDATION_ERROR
        )
    raw_name = parser.get("experiment", "name").strip()
    try:
        experiment = ExperimentName(raw_name)
    except ValueError as exc:
        known = ", ".join(e.value for e in ExperimentName)
        raise ParameterError(
            f"unknown experiment '{raw_name}' (known: {known})",
            code=ErrorCode.UNKNOWN_EXPERIMENT,
        ) from exc

    for section in REQUIRED_SECTIONS[experiment]:
        if not parser.has_section(section):
            raise ParameterError(
                f"[{section}] section required by experiment '{experiment.value}'",
                code=ErrorCode.VALIDATION_ERROR,
            )

    resolved: dict[str, Any] = {"experiment": experiment}
    for section, model in SECTION_MODELS.items():
        if parser.has_section(section):
            resolved[section] = _build_section(section, model, dict(parser.items(section)))

    sweep_values = {k: v for k, v in parser.items("experiment") if k != "name"}
    resolved["sweep"] = _build_section("experiment", SweepSpec, sweep_values)

    unknown = set(parser.sections()) - set(SECTION_MODELS) - {"experiment"}
    for section in sorted(unknown):
        logger.warning("Ignoring unknown config section [%s]", section)

    return ExperimentConfig(**resolved)


def load_config(path: str | Path) -> ExperimentConfig:
    """Read and validate a configuration file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParameterError(
            f"cannot read config {path}: {exc.strerror}", code=ErrorCode.CONFIG_PARSE_ERROR
        ) from exc
    return parse_config(text, source=str(path))
