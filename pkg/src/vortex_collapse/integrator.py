"""Adaptive Dormand-Prince 5(4) integration of the vortex equations.

Steps are controlled per vortex: the local error of vortex ``i`` is measured
against ``abs_tol + rel_tol * |x_i|``, which keeps the controller independent of
the orientation of the frame. Time is accumulated as an unevaluated pair of
floats so that a collapsing run can keep stepping once the step size falls far
below the floating spacing of ``t``. A run stops early when the minimal pair
distance crosses the collapse radius; the crossing is located on the quartic
dense output of the last step.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from vortex_collapse import disc
from vortex_collapse.core import invariants, min_pair_distance, planar_rhs
from vortex_collapse.exceptions import (
    DomainError,
    InvalidStateError,
    SingularConfigurationError,
)
from vortex_collapse.logger import get_logger
from vortex_collapse.state import DiscState, FloatArray, InvariantSample, VortexState
from vortex_collapse.trajectory import (
    FieldKind,
    StepInterpolant,
    Termination,
    TerminationKind,
    TrajectoryRecord,
)

if TYPE_CHECKING:
    from vortex_collapse.config import Settings

__all__ = [
    "DriftReport",
    "IntegratorOptions",
    "identity_residual",
    "integrate",
    "invariant_drift",
    "refine_collapse_time",
]

log = get_logger(__name__)

# Dormand-Prince 5(4) tableau.
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)
# Shampine's quartic dense output for the pair above.
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_EXPONENT = 0.17
_HISTORY_EXPONENT = 0.04
_THETA_PRECISION = 1e-12
_BOUNDARY_WARNING = 1e-6


class IntegratorOptions(BaseModel):
    """Tolerances and limits of one integration.

    Attributes:
        rel_tol: Relative local error tolerance.
        abs_tol: Absolute local error tolerance.
        max_step: Largest admissible step, unbounded when None.
        collapse_radius: Minimal pair distance at which a run is declared collapsed.
        max_steps: Budget of attempted steps.
        distance_floor: Pair distances below this count as a singular configuration.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    rel_tol: float = Field(default=1e-12, gt=0)
    abs_tol: float = Field(default=1e-14, gt=0)
    max_step: float | None = Field(default=None, gt=0)
    collapse_radius: float = Field(default=1e-8, gt=0)
    max_steps: int = Field(default=200_000, gt=0)
    distance_floor: float = Field(default=1e-30, gt=0)

    @classmethod
    def from_settings(cls, settings: Settings, **overrides: Any) -> Self:
        """Build options from application settings, applying keyword overrides."""
        values: dict[str, Any] = {
            "rel_tol": settings.rel_tol,
            "abs_tol": settings.abs_tol,
            "collapse_radius": settings.collapse_radius,
            "max_steps": settings.max_steps,
            "distance_floor": settings.distance_floor,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass(frozen=True, slots=True)
class _System:
    """Right-hand side, state factory and invariant sampler of one field."""

    rhs: Callable[[FloatArray], FloatArray]
    make_state: Callable[[FloatArray], VortexState]
    sample: Callable[[VortexState], InvariantSample]


def _system_for(field: FieldKind, state: VortexState, distance_floor: float) -> _System:
    """Bind the field's right-hand side to the intensities of ``state``."""
    a = state.intensities
    if field is FieldKind.DISC:
        if state.alpha != 1.0:
            raise DomainError("disc dynamics are defined for alpha = 1 only")
        return _System(
            rhs=lambda y: disc.disc_rhs(y, a, distance_floor),
            make_state=lambda y: DiscState(y, a),
            sample=disc.disc_invariants,
        )
    alpha = state.alpha
    return _System(
        rhs=lambda y: planar_rhs(y, a, alpha, distance_floor),
        make_state=lambda y: VortexState(y, a, alpha),
        sample=invariants,
    )


def _two_sum(a: float, b: float) -> tuple[float, float]:
    """Error-free sum: a + b = s + err exactly."""
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


class _Clock:
    """Time carried as an unevaluated sum hi + lo."""

    __slots__ = ("hi", "lo")

    def __init__(self, t: float) -> None:
        self.hi = t
        self.lo = 0.0

    def advance(self, h: float) -> None:
        s, err = _two_sum(self.hi, h)
        self.hi, self.lo = _two_sum(s, self.lo + err)

    def remaining(self, t_end: float) -> float:
        return (t_end - self.hi) - self.lo

    @property
    def value(self) -> float:
        return self.hi + self.lo


def _error_scale(y: FloatArray, y_new: FloatArray, opts: IntegratorOptions) -> FloatArray:
    """Per-vortex tolerance scale."""
    radius = np.maximum(np.hypot(y[:, 0], y[:, 1]), np.hypot(y_new[:, 0], y_new[:, 1]))
    return np.asarray(opts.abs_tol + opts.rel_tol * radius)


def _rms(per_vortex: FloatArray) -> float:
    return float(np.sqrt(np.mean(per_vortex**2)))


def _vortex_norm(v: FloatArray) -> FloatArray:
    return np.asarray(np.hypot(v[..., 0], v[..., 1]))


def _initial_step(
    system: _System, y: FloatArray, f: FloatArray, span: float, opts: IntegratorOptions
) -> float:
    """Starting step size after Hairer, Norsett and Wanner."""
    scale = _error_scale(y, y, opts)
    d0 = _rms(_vortex_norm(y) / scale)
    d1 = _rms(_vortex_norm(f) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    try:
        f1 = system.rhs(y + h0 * f)
        d2 = _rms(_vortex_norm(f1 - f) / scale) / h0
    except SingularConfigurationError:
        d2 = np.inf
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 5.0)
    h = min(100.0 * h0, h1, span)
    if opts.max_step is not None:
        h = min(h, opts.max_step)
    return h


def _stages(
    system: _System, y: FloatArray, f: FloatArray, h: float
) -> tuple[FloatArray, FloatArray]:
    """All seven stage derivatives and the fifth-order update."""
    k = np.empty((7, *y.shape))
    k[0] = f
    for s in range(1, 6):
        k[s] = system.rhs(y + h * np.einsum("s,snk->nk", np.asarray(_A[s]), k[:s]))
    y_new = y + h * np.einsum("s,snk->nk", _B, k)
    k[6] = system.rhs(y_new)
    return k, y_new


def _crossing_theta(segment: StepInterpolant, radius: float) -> float:
    """Smallest bisected fraction of the step with min pair distance <= radius."""
    lo, hi = 0.0, 1.0
    while hi - lo > _THETA_PRECISION:
        mid = 0.5 * (lo + hi)
        if min_pair_distance(segment(mid)) <= radius:
            hi = mid
        else:
            lo = mid
    return hi


class _Recorder:
    """Accumulates samples, keeping one sample per distinct floating time."""

    def __init__(self, system: _System) -> None:
        self._system = system
        self.times: list[float] = []
        self.states: list[VortexState] = []
        self.invariants: list[InvariantSample] = []

    def add(self, t: float, y: FloatArray) -> None:
        state = self._system.make_state(y)
        sample = self._system.sample(state)
        if self.times and t <= self.times[-1]:
            self.times[-1], self.states[-1], self.invariants[-1] = t, state, sample
            return
        self.times.append(t)
        self.states.append(state)
        self.invariants.append(sample)

    def add_state(self, t: float, state: VortexState) -> None:
        self.times.append(t)
        self.states.append(state)
        self.invariants.append(self._system.sample(state))


def integrate(
    state: VortexState,
    t0: float,
    t1: float,
    opts: IntegratorOptions | None = None,
    field: FieldKind = FieldKind.PLANE,
    *,
    sample_times: Sequence[float] | FloatArray | None = None,
) -> TrajectoryRecord:
    """Integrate a vortex configuration from ``t0`` towards ``t1``.

    Args:
        state: Initial configuration.
        t0: Initial time.
        t1: Final time, must exceed ``t0``.
        opts: Tolerances and limits; defaults when None.
        field: Planar alpha field or the unit-disc Euler field.
        sample_times: Extra times at which dense output is recorded.

    Returns:
        The trajectory record. Failures are reported in ``record.termination``
        rather than raised.

    Raises:
        DomainError: If ``t1 <= t0`` or the disc field is used with alpha != 1.
    """
    if not t1 > t0:
        raise DomainError(f"final time {t1} must exceed initial time {t0}")
    opts = opts or IntegratorOptions()
    system = _system_for(field, state, opts.distance_floor)
    first = system.make_state(np.asarray(state.positions))

    requested = np.sort(np.asarray(sample_times if sample_times is not None else [], dtype=np.float64))
    requested = requested[(requested > t0) & (requested < t1)]
    next_request = 0

    recorder = _Recorder(system)
    recorder.add_state(t0, first)
    clock = _Clock(t0)
    accepted = rejected = 0
    final_segment: StepInterpolant | None = None
    warned_boundary = False

    log.debug(
        "integration started",
        n=state.n,
        alpha=state.alpha,
        field=field.value,
        t0=t0,
        t1=t1,
    )

    def finish(termination: Termination) -> TrajectoryRecord:
        log.info(
            "integration finished",
            termination=termination.kind.value,
            t=recorder.times[-1],
            accepted=accepted,
            rejected=rejected,
        )
        return TrajectoryRecord(
            times=np.asarray(recorder.times),
            states=tuple(recorder.states),
            invariants=tuple(recorder.invariants),
            termination=termination,
            collapse_radius=opts.collapse_radius,
            field=field,
            steps_accepted=accepted,
            steps_rejected=rejected,
            final_segment=final_segment,
        )

    if recorder.invariants[0].min_pair_distance <= opts.collapse_radius:
        return finish(Termination(TerminationKind.COLLAPSED, collapse_time=t0))

    y = np.array(first.positions)
    try:
        f = system.rhs(y)
    except SingularConfigurationError as e:
        return finish(Termination(TerminationKind.SINGULAR_FAILURE, message=str(e)))
    h = _initial_step(system, y, f, t1 - t0, opts)
    err_prev = 1e-4
    rejected_last = False
    eps = float(np.finfo(np.float64).eps)

    while (remaining := clock.remaining(t1)) > 0:
        if accepted + rejected >= opts.max_steps:
            log.warning("step limit reached", t=clock.value, max_steps=opts.max_steps)
            return finish(
                Termination(
                    TerminationKind.STEP_LIMIT,
                    message=f"{opts.max_steps} steps attempted before t = {t1}",
                )
            )
        last = h >= remaining
        if last:
            h = remaining

        try:
            k, y_new = _stages(system, y, f, h)
            scale = _error_scale(y, y_new, opts)
            err = _rms(_vortex_norm(h * np.einsum("s,snk->nk", _E, k)) / scale)
        except SingularConfigurationError:
            err = np.inf

        if not (np.isfinite(err) and err <= 1.0):
            rejected += 1
            factor = _MIN_FACTOR if not np.isfinite(err) else max(
                _MIN_FACTOR, _SAFETY * err ** (-1.0 / 5.0)
            )
            h *= factor
            rejected_last = True
            speed = float(_vortex_norm(f).max())
            if h * speed <= 4.0 * eps * float(np.abs(y).max()) or h <= np.finfo(np.float64).tiny:
                log.warning("step size underflow", t=clock.value, h=h)
                return finish(
                    Termination(
                        TerminationKind.SINGULAR_FAILURE,
                        message=f"step size underflow at t = {clock.value!r}",
                    )
                )
            continue

        accepted += 1
        segment = StepInterpolant(
            t_hi=clock.hi,
            t_lo=clock.lo,
            h=h,
            y0=y,
            coeffs=np.einsum("snk,sp->nkp", k, _P),
        )

        if min_pair_distance(y_new) <= opts.collapse_radius:
            theta = _crossing_theta(segment, opts.collapse_radius)
            t_c = segment.time_at(theta)
            while next_request < requested.size and requested[next_request] < t_c:
                s = float(requested[next_request])
                recorder.add(s, segment(((s - clock.hi) - clock.lo) / h))
                next_request += 1
            try:
                recorder.add(t_c, segment(theta))
            except InvalidStateError:
                recorder.add(t_c, y_new)
            final_segment = segment
            log.info("collapse detected", t_c=t_c, dmin=recorder.invariants[-1].min_pair_distance)
            return finish(Termination(TerminationKind.COLLAPSED, collapse_time=t_c))

        t_end = segment.t_end if not last else t1
        while next_request < requested.size and requested[next_request] < t_end:
            s = float(requested[next_request])
            recorder.add(s, segment(((s - clock.hi) - clock.lo) / h))
            next_request += 1

        if last:
            clock = _Clock(t1)
        else:
            clock.advance(h)
        try:
            recorder.add(clock.value, y_new)
        except (InvalidStateError, DomainError) as e:
            log.warning("invalid state produced", t=clock.value, error=str(e))
            return finish(Termination(TerminationKind.SINGULAR_FAILURE, message=str(e)))

        if field is FieldKind.DISC and not warned_boundary:
            gap = 1.0 - float(_vortex_norm(y_new).max())
            if gap < _BOUNDARY_WARNING:
                log.warning("vortex close to the boundary", t=clock.value, distance=gap)
                warned_boundary = True

        y, f = y_new, k[6]
        factor = _SAFETY * max(err, 1e-10) ** (-_EXPONENT) * err_prev**_HISTORY_EXPONENT
        factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
        if rejected_last:
            factor = min(factor, 1.0)
        h *= factor
        if opts.max_step is not None:
            h = min(h, opts.max_step)
        err_prev = max(err, 1e-4)
        rejected_last = False

    return finish(Termination(TerminationKind.REACHED_FINAL_TIME))


def refine_collapse_time(record: TrajectoryRecord) -> float:
    """Locate the time at which the minimal pair distance crosses the collapse radius.

    Bisects the dense output of the crossing step when the record carries it,
    otherwise interpolates the minimal distance linearly between the two
    samples that bracket the crossing.

    Args:
        record: A collapsed trajectory.

    Returns:
        The collapse time.

    Raises:
        NoCollapseError: If the record did not terminate by collapse.
    """
    record.require_collapse()
    radius = record.collapse_radius
    if record.final_segment is not None:
        segment = record.final_segment
        return segment.time_at(_crossing_theta(segment, radius))

    d = record.min_distances
    below = np.flatnonzero(d <= radius)
    k = int(below[0])
    if k == 0:
        return float(record.times[0])
    t_a, t_b = float(record.times[k - 1]), float(record.times[k])
    d_a, d_b = float(d[k - 1]), float(d[k])
    return t_a + (d_a - radius) / (d_a - d_b) * (t_b - t_a)


@dataclass(frozen=True, slots=True)
class DriftReport:
    """Maximal relative drift of each monitored functional over a record."""

    hamiltonian: float
    vorticity_x: float
    vorticity_y: float
    momentum: float
    pair_moment: float
    identity: float

    @property
    def conserved_max(self) -> float:
        """Largest drift among H, M and I."""
        return max(self.hamiltonian, self.vorticity_x, self.vorticity_y, self.momentum)


def _reference_scales(state: VortexState) -> dict[str, float]:
    """Absolute-value versions of each functional, used as drift floors."""
    abs_a = np.abs(state.intensities)
    radii = _vortex_norm(state.positions)
    pair_abs = np.abs(np.outer(state.intensities, state.intensities))
    np.fill_diagonal(pair_abs, 0.0)
    diff = state.positions[:, None, :] - state.positions[None, :, :]
    sq = np.einsum("ijk,ijk->ij", diff, diff)
    return {
        "hamiltonian": 0.5 * float(pair_abs.sum()),
        "vorticity": float(abs_a @ radii),
        "momentum": float(abs_a @ radii**2),
        "pair_moment": float(np.sum(pair_abs * sq)),
    }


def _relative_drift(values: FloatArray, reference: float) -> float:
    denom = max(abs(float(values[0])), reference)
    if denom == 0.0:
        return 0.0
    return float(np.max(np.abs(values - values[0]))) / denom


def identity_residual(record: TrajectoryRecord) -> float:
    """Largest relative defect of L = 2 (sum a) I - 2 |M|^2 over the samples."""
    total = float(record.intensities.sum())
    abs_a = np.abs(record.intensities)
    worst = 0.0
    for state, inv in zip(record.states, record.invariants, strict=True):
        m2 = inv.vorticity_vector[0] ** 2 + inv.vorticity_vector[1] ** 2
        radii2 = np.einsum("ij,ij->i", state.positions, state.positions)
        scale = abs(inv.pair_moment) + 2.0 * abs(total) * float(abs_a @ radii2) + 2.0 * m2
        if scale == 0.0:
            continue
        defect = abs(inv.pair_moment - (2.0 * total * inv.momentum - 2.0 * m2))
        worst = max(worst, defect / scale)
    return worst


def invariant_drift(record: TrajectoryRecord) -> DriftReport:
    """Maximal relative drift of H, M, I and L along a record.

    Each drift is ``max_t |Q(t) - Q(0)|`` divided by ``max(|Q(0)|, Q_ref)``,
    where ``Q_ref`` replaces every intensity and coordinate product by its
    absolute value.
    """
    ref = _reference_scales(record.states[0])
    inv = record.invariants
    h = np.array([s.hamiltonian for s in inv])
    mx = np.array([s.vorticity_vector[0] for s in inv])
    my = np.array([s.vorticity_vector[1] for s in inv])
    i = np.array([s.momentum for s in inv])
    lm = np.array([s.pair_moment for s in inv])
    return DriftReport(
        hamiltonian=_relative_drift(h, ref["hamiltonian"]),
        vorticity_x=_relative_drift(mx, ref["vorticity"]),
        vorticity_y=_relative_drift(my, ref["vorticity"]),
        momentum=_relative_drift(i, ref["momentum"]),
        pair_moment=_relative_drift(lm, ref["pair_moment"]),
        identity=identity_residual(record),
    )
