"""Trajectory records produced by the integrator."""

from __future__ import annotations

from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property

import numpy as np

from vortex_collapse.exceptions import InvalidStateError, NoCollapseError
from vortex_collapse.state import FloatArray, InvariantSample, VortexState

__all__ = [
    "FieldKind",
    "StepInterpolant",
    "Termination",
    "TerminationKind",
    "TrajectoryRecord",
]


class FieldKind(StrEnum):
    """Vector field driving an integration."""

    PLANE = "plane"
    DISC = "disc"


class TerminationKind(StrEnum):
    """How an integration ended."""

    REACHED_FINAL_TIME = "reached_final_time"
    COLLAPSED = "collapsed"
    STEP_LIMIT = "step_limit"
    SINGULAR_FAILURE = "singular_failure"


@dataclass(frozen=True, slots=True)
class Termination:
    """Termination status, with the collapse time when the run collapsed."""

    kind: TerminationKind
    collapse_time: float | None = None
    message: str = ""

    @property
    def succeeded(self) -> bool:
        """True for final-time and collapse terminations."""
        return self.kind in (TerminationKind.REACHED_FINAL_TIME, TerminationKind.COLLAPSED)


@dataclass(frozen=True, slots=True, eq=False)
class StepInterpolant:
    """Quartic dense output over one accepted step.

    ``y(t_start + theta * h) = y0 + h * coeffs @ (theta, theta^2, theta^3, theta^4)``
    with ``coeffs`` of shape (N, 2, 4). ``t_start`` is carried as an unevaluated
    sum ``t_hi + t_lo``.
    """

    t_hi: float
    t_lo: float
    h: float
    y0: FloatArray
    coeffs: FloatArray

    def __call__(self, theta: float) -> FloatArray:
        powers = np.array([theta, theta**2, theta**3, theta**4])
        return np.asarray(self.y0 + self.h * (self.coeffs @ powers))

    def time_at(self, theta: float) -> float:
        """Floating time at fraction ``theta`` of the step."""
        return self.t_hi + (self.t_lo + theta * self.h)

    @property
    def t_end(self) -> float:
        return self.time_at(1.0)


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """Time-stamped states with their invariants and the termination status.

    Attributes:
        times: Strictly increasing sample times.
        states: One state per sample.
        invariants: One invariant sample per state.
        termination: How the run ended.
        collapse_radius: Radius used for collapse detection.
        field: Vector field that produced the record.
        steps_accepted: Accepted integrator steps.
        steps_rejected: Rejected integrator steps.
        final_segment: Dense output of the step that crossed the collapse radius.
    """

    times: FloatArray
    states: tuple[VortexState, ...]
    invariants: tuple[InvariantSample, ...]
    termination: Termination
    collapse_radius: float
    field: FieldKind = FieldKind.PLANE
    steps_accepted: int = 0
    steps_rejected: int = 0
    final_segment: StepInterpolant | None = None

    def __post_init__(self) -> None:
        times = np.array(self.times, dtype=np.float64)
        times.setflags(write=False)
        if not (times.size == len(self.states) == len(self.invariants)):
            raise InvalidStateError("times, states and invariants must have equal lengths")
        if times.size == 0:
            raise InvalidStateError("a trajectory needs at least one sample")
        if np.any(np.diff(times) <= 0):
            raise InvalidStateError("sample times must be strictly increasing")
        object.__setattr__(self, "times", times)

    @cached_property
    def positions(self) -> FloatArray:
        """Positions stacked to shape (S, N, 2)."""
        return np.stack([s.positions for s in self.states])

    @cached_property
    def min_distances(self) -> FloatArray:
        """Minimal pair distance of every sample."""
        return np.array([inv.min_pair_distance for inv in self.invariants])

    @property
    def intensities(self) -> FloatArray:
        return self.states[0].intensities

    @property
    def alpha(self) -> float:
        return self.states[0].alpha

    @property
    def n_vortices(self) -> int:
        return self.states[0].n

    @property
    def collapsed(self) -> bool:
        return self.termination.kind is TerminationKind.COLLAPSED

    def require_collapse(self) -> float:
        """Return the collapse time or raise ``NoCollapseError``."""
        if not self.collapsed or self.termination.collapse_time is None:
            raise NoCollapseError(
                f"trajectory terminated with {self.termination.kind.value}, not a collapse"
            )
        return self.termination.collapse_time
