"""Scenario files: schema, loading and initial-state construction."""

from __future__ import annotations

from pathlib import Path
from typing import Annotated, Literal, Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from vortex_collapse.analysis import DEFAULT_FIT_WINDOW
from vortex_collapse.exceptions import ScenarioError, VortexCollapseError
from vortex_collapse.logger import get_logger
from vortex_collapse.scenarios import load_template, template_names
from vortex_collapse.selfsimilar import SelfSimilarSolution, build_configuration
from vortex_collapse.state import DiscState, FloatArray, VortexState
from vortex_collapse.trajectory import FieldKind

__all__ = [
    "SCHEMA_VERSION",
    "AnalysisRequests",
    "DiscField",
    "ExplicitSource",
    "IntegratorOverrides",
    "PlaneField",
    "RandomSource",
    "Scenario",
    "SelfSimilarSource",
    "build_initial_state",
    "load_scenario",
    "parse_scenario",
    "resolve_template",
]

log = get_logger(__name__)

SCHEMA_VERSION = 1
_MAX_PLACEMENT_ATTEMPTS = 10_000

Point = tuple[float, float]


class _Model(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class PlaneField(_Model):
    """Planar alpha-model."""

    kind: Literal["plane"] = "plane"
    alpha: float = Field(ge=0)


class DiscField(_Model):
    """Euler vortices (alpha = 1) in the unit disc."""

    kind: Literal["disc"] = "disc"


FieldSpec = Annotated[PlaneField | DiscField, Field(discriminator="kind")]


class ExplicitSource(_Model):
    """Intensities and positions given verbatim."""

    kind: Literal["explicit"] = "explicit"
    intensities: list[float] = Field(min_length=1)
    positions: list[Point] = Field(min_length=1)

    @model_validator(mode="after")
    def _lengths_match(self) -> Self:
        if len(self.intensities) != len(self.positions):
            raise ValueError("intensities and positions must have the same length")
        return self


class SelfSimilarSource(_Model):
    """The collapsing three-vortex triangle for the field's alpha."""

    kind: Literal["selfsimilar"] = "selfsimilar"
    orientation: Literal[1, -1] | None = None
    scale: float = Field(default=1.0, gt=0)
    center: Point = (0.0, 0.0)


class RandomSource(_Model):
    """Uniformly random positions and intensities.

    Positions are drawn in ``[-box, box]^2`` (the disc of radius ``box`` for the
    disc field) and rejected until every pair is ``min_separation`` apart.
    Intensity magnitudes are uniform in ``intensity_range``; with
    ``mixed_signs`` each sign is drawn independently.
    """

    kind: Literal["random"] = "random"
    n: int = Field(ge=1, le=25)
    seed: int | None = Field(default=None, ge=0, lt=2**64)
    box: float = Field(default=1.0, gt=0)
    intensity_range: tuple[float, float] = (0.2, 0.6)
    mixed_signs: bool = False
    min_separation: float = Field(default=0.0, ge=0)

    @model_validator(mode="after")
    def _positive_range(self) -> Self:
        lo, hi = self.intensity_range
        if not 0 < lo <= hi:
            raise ValueError("intensity_range must satisfy 0 < lo <= hi")
        return self


VortexSource = Annotated[
    ExplicitSource | SelfSimilarSource | RandomSource, Field(discriminator="kind")
]


class IntegratorOverrides(_Model):
    """Per-scenario integrator settings; unset fields fall through to defaults."""

    rel_tol: float | None = Field(default=None, gt=0)
    abs_tol: float | None = Field(default=None, gt=0)
    max_step: float | None = Field(default=None, gt=0)
    collapse_radius: float | None = Field(default=None, gt=0)
    max_steps: int | None = Field(default=None, gt=0)


class AnalysisRequests(_Model):
    """Analyses to run after the integration."""

    invariants: bool = True
    holder: bool = False
    clusters: bool = False
    prevent_collapse: bool = False
    eta: float = Field(default=0.5, gt=0, le=1)
    fit_window: tuple[float, float] = DEFAULT_FIT_WINDOW
    cluster_scale: float = Field(default=1.0, gt=0)
    cluster_kappa: float = Field(default=0.5, gt=0, lt=1)


class Scenario(_Model):
    """One simulation: field, initial vortices, horizon, tolerances and analyses.

    ``t_final`` is the integration horizon. With ``run_to_collapse`` the run is
    expected to stop at a collapse before it; self-similar sources may omit it,
    in which case 1.5 times the predicted collapse time is used.
    """

    schema_version: Literal[1]
    name: str = "scenario"
    field: FieldSpec
    vortices: VortexSource
    t_final: float | None = Field(default=None, gt=0)
    run_to_collapse: bool = False
    integrator: IntegratorOverrides = IntegratorOverrides()
    dense_samples: int | None = Field(default=None, ge=0)
    analyses: AnalysisRequests = AnalysisRequests()

    @model_validator(mode="after")
    def _horizon_known(self) -> Self:
        if self.t_final is None and not (
            self.run_to_collapse and isinstance(self.vortices, SelfSimilarSource)
        ):
            raise ValueError("t_final is required unless a self-similar source runs to collapse")
        return self

    @property
    def field_kind(self) -> FieldKind:
        return FieldKind.DISC if isinstance(self.field, DiscField) else FieldKind.PLANE

    @property
    def alpha(self) -> float:
        return self.field.alpha if isinstance(self.field, PlaneField) else 1.0

    def with_seed(self, seed: int | None) -> Scenario:
        """Copy with the random source reseeded; other sources are unchanged."""
        if seed is None or not isinstance(self.vortices, RandomSource):
            return self
        return self.model_copy(update={"vortices": self.vortices.model_copy(update={"seed": seed})})

    def with_alpha(self, alpha: float) -> Scenario:
        """Validated copy with a new planar alpha.

        Raises:
            ScenarioError: If the scenario is set in the disc or alpha is invalid.
        """
        if not isinstance(self.field, PlaneField):
            raise ScenarioError("alpha can only be swept for planar scenarios")
        data = self.model_dump(mode="json")
        data["field"]["alpha"] = alpha
        return parse_scenario(data, source=f"{self.name} (alpha={alpha})")


def parse_scenario(data: object, *, source: str = "<scenario>") -> Scenario:
    """Validate parsed JSON data or raw JSON text as a scenario.

    Raises:
        ScenarioError: If the data does not match the schema.
    """
    try:
        if isinstance(data, str | bytes):
            return Scenario.model_validate_json(data)
        return Scenario.model_validate(data)
    except ValidationError as e:
        raise ScenarioError(f"invalid scenario {source}: {e}") from e


def load_scenario(path: Path) -> Scenario:
    """Read and validate a scenario file.

    Raises:
        ScenarioError: If the file cannot be read or is not a valid scenario.
    """
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioError(f"cannot read scenario {path}: {e}") from e
    return parse_scenario(text, source=str(path))


def resolve_template(name_or_path: str) -> Scenario:
    """Load a scenario from a file path or a bundled template name.

    Raises:
        ScenarioError: If neither a file nor a bundled template matches.
    """
    path = Path(name_or_path)
    if path.is_file():
        return load_scenario(path)
    if name_or_path in template_names():
        return parse_scenario(load_template(name_or_path), source=f"template {name_or_path}")
    raise ScenarioError(
        f"no scenario file or bundled template named {name_or_path!r} "
        f"(bundled: {', '.join(template_names())})"
    )


def _random_configuration(source: RandomSource, disc: bool) -> tuple[FloatArray, FloatArray]:
    rng = np.random.default_rng(source.seed)
    lo, hi = source.intensity_range
    for _ in range(_MAX_PLACEMENT_ATTEMPTS):
        if disc:
            radius = source.box * np.sqrt(rng.uniform(0.0, 1.0, source.n))
            angle = rng.uniform(0.0, 2.0 * np.pi, source.n)
            positions = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1)
        else:
            positions = rng.uniform(-source.box, source.box, (source.n, 2))
        diff = positions[:, None, :] - positions[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        np.fill_diagonal(dist, np.inf)
        if source.n == 1 or float(dist.min()) >= source.min_separation:
            break
    else:
        raise ScenarioError(
            f"could not place {source.n} vortices {source.min_separation} apart "
            f"in {_MAX_PLACEMENT_ATTEMPTS} attempts"
        )
    intensities = rng.uniform(lo, hi, source.n)
    if source.mixed_signs:
        intensities *= rng.choice([-1.0, 1.0], source.n)
    return positions, intensities


def build_initial_state(scenario: Scenario) -> tuple[VortexState, SelfSimilarSolution | None]:
    """Construct the initial configuration of a scenario.

    Returns:
        The state (a ``DiscState`` for the disc field) and, for self-similar
        sources, the analytic solution.

    Raises:
        ScenarioError: If the configuration is invalid for the chosen field.
    """
    disc = scenario.field_kind is FieldKind.DISC
    source = scenario.vortices
    sol: SelfSimilarSolution | None = None
    try:
        match source:
            case ExplicitSource():
                positions = np.asarray(source.positions, dtype=np.float64)
                intensities = np.asarray(source.intensities, dtype=np.float64)
            case SelfSimilarSource():
                sol = build_configuration(
                    scenario.alpha,
                    source.orientation,
                    scale=source.scale,
                    center=source.center,
                )
                positions = np.asarray(sol.initial_state.positions)
                intensities = np.asarray(sol.initial_state.intensities)
            case RandomSource():
                positions, intensities = _random_configuration(source, disc)
        state: VortexState = (
            DiscState(positions, intensities)
            if disc
            else VortexState(positions, intensities, scenario.alpha)
        )
    except ScenarioError:
        raise
    except VortexCollapseError as e:
        raise ScenarioError(f"scenario {scenario.name!r} has an invalid configuration: {e}") from e
    log.debug("initial state built", scenario=scenario.name, n=state.n, source=source.kind)
    return state, sol
