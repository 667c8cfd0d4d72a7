"""Post-hoc checks of collapse predictions on trajectory data.

Hölder fits regress ``log|x_i(t) - x_i*|`` (or ``log|x_i - x_j|``) on
``log(T - t)`` over a window of relative times before the collapse. The
prevent-collapse check evaluates the explicit time constant C_kappa and scans a
record for counterexamples to the implication

    T - t <= C_kappa eta**(alpha + 1) and |x_i(t) - x_j(t)| >= eta
        ==>  |x_i(tau) - x_j(tau)| >= eta / 2 for every later tau.
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from numpy.typing import NDArray
from scipy.spatial.distance import pdist

from vortex_collapse.clustering import collision_clusters
from vortex_collapse.core import barycenter_speed_bound, degeneracy_params
from vortex_collapse.exceptions import (
    DegenerateIntensitiesError,
    DomainError,
    InsufficientSamplesError,
    NeutralClusterError,
    NoCollapseError,
)
from vortex_collapse.logger import get_logger
from vortex_collapse.state import FloatArray, as_float_array

if TYPE_CHECKING:
    from numpy.typing import ArrayLike

    from vortex_collapse.trajectory import TrajectoryRecord

__all__ = [
    "DEFAULT_FIT_WINDOW",
    "Counterexample",
    "HolderFit",
    "PreventCollapseBound",
    "PreventCollapseVerdict",
    "QuasiPreservationReport",
    "check_prevent_collapse_implication",
    "extrapolate_collapse_time",
    "holder_fit",
    "prevent_collapse_constant",
    "quasi_preservation_check",
    "relative_holder_fit",
]

log = get_logger(__name__)

DEFAULT_FIT_WINDOW = (1e-6, 1e-1)
MIN_FIT_SAMPLES = 20
_RICHARDSON_RATIO = 10.0
_MAX_ORDER_ITERATIONS = 500
_ORDER_TOL = 1e-10
_NEUTRAL_TOL = 1e-14


@dataclass(frozen=True, slots=True)
class HolderFit:
    """Power-law fit of a distance to the collapse against the time left.

    Attributes:
        index: Vortex index, or a pair of indices for a relative fit.
        limit_point: Estimated limit position, None for relative fits.
        exponent: Fitted exponent beta.
        intercept: Fitted log-constant, ``log|...| ~ intercept + beta log(T - t)``.
        fit_residual: RMS deviation of the log-log data from the line.
        sample_range: (t_min, t_max) of the samples used.
        n_samples: Number of samples in the fit.
        window: Relative window of ``(T - t) / T`` that was requested.
    """

    index: int | tuple[int, int]
    limit_point: tuple[float, float] | None
    exponent: float
    intercept: float
    fit_residual: float
    sample_range: tuple[float, float]
    n_samples: int
    window: tuple[float, float]

    @property
    def constant(self) -> float:
        """Empirical Hölder constant exp(intercept)."""
        return math.exp(self.intercept)


def _fit_mask(
    record: TrajectoryRecord, t_collapse: float, window: tuple[float, float]
) -> tuple[NDArray[np.bool_], FloatArray]:
    """Samples whose relative time to collapse lies in the window."""
    lo, hi = window
    if not 0 < lo < hi:
        raise DomainError(f"fit window must satisfy 0 < lo < hi, got {window}")
    span = t_collapse - float(record.times[0])
    if not span > 0:
        raise DomainError("collapse time must follow the first sample")
    tau = t_collapse - record.times
    rel = tau / span
    mask = (rel >= lo) & (rel <= hi)
    count = int(mask.sum())
    if count < MIN_FIT_SAMPLES:
        raise InsufficientSamplesError(
            f"{count} samples in the fit window {window}, at least {MIN_FIT_SAMPLES} required"
        )
    return mask, tau


def _log_log_fit(tau: FloatArray, distance: FloatArray) -> tuple[float, float, float]:
    """Slope, intercept and RMS residual of log(distance) against log(tau)."""
    keep = distance > 0
    if int(keep.sum()) < MIN_FIT_SAMPLES:
        raise InsufficientSamplesError("too many samples sit on the limit point")
    x = np.log(tau[keep])
    y = np.log(distance[keep])
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), float(intercept), residual


def _richardson(
    tau: FloatArray, values: FloatArray, order: float
) -> FloatArray:
    """Extrapolate ``values(tau) ~ v* + c tau**order`` to tau = 0.

    Uses the last sample before the collapse and the sample whose tau is
    closest to ten times larger.
    """
    positive = np.flatnonzero(tau > 0)
    near = int(positive[np.argmin(tau[positive])])
    far = int(positive[np.argmin(np.abs(np.log(tau[positive] / (_RICHARDSON_RATIO * tau[near]))))])
    if far == near:
        return np.asarray(values[near])
    q = (tau[far] / tau[near]) ** order
    return np.asarray((q * values[near] - values[far]) / (q - 1.0))


def _estimate_limit_point(
    record: TrajectoryRecord,
    t_collapse: float,
    index: int,
    exponent_hint: float | None,
) -> FloatArray:
    """Limit position of vortex ``index`` at the collapse.

    The center of vorticity of the vortex's collision group converges to the
    common limit smoothly, so it is extrapolated at first order. A singleton or
    neutral group falls back to the vortex itself, with the order iterated to
    the fitted exponent unless one is supplied.
    """
    tau = t_collapse - record.times
    part = collision_clusters(record).part_of(index)
    a = record.intensities
    members = sorted(part)
    weight = float(a[members].sum())
    if len(members) > 1 and abs(weight) > _NEUTRAL_TOL * float(np.abs(a).sum()):
        centers = np.einsum("k,skj->sj", a[members], record.positions[:, members, :]) / weight
        return _richardson(tau, centers, 1.0)

    track = record.positions[:, index, :]
    if exponent_hint is not None:
        return _richardson(tau, track, exponent_hint)
    order = 1.0
    estimate = _richardson(tau, track, order)
    for _ in range(_MAX_ORDER_ITERATIONS):
        gap = np.hypot(*(track - estimate).T)
        recent = (tau > 0) & (tau <= _RICHARDSON_RATIO**2 * np.min(tau[tau > 0]))
        if int(recent.sum()) < 3 or np.any(gap[recent] <= 0):
            break
        slope, _ = np.polyfit(np.log(tau[recent]), np.log(gap[recent]), 1)
        if not slope > 0:
            break
        step = abs(float(slope) - order)
        order = float(slope)
        estimate = _richardson(tau, track, order)
        if step < _ORDER_TOL:
            break
    else:
        log.warning("limit point order did not settle", index=index, order=order)
    return estimate


def holder_fit(
    record: TrajectoryRecord,
    t_collapse: float,
    index: int,
    *,
    limit_point: ArrayLike | None = None,
    exponent_hint: float | None = None,
    window: tuple[float, float] = DEFAULT_FIT_WINDOW,
) -> HolderFit:
    """Fit the Hölder exponent of one vortex at the collapse.

    Args:
        record: Collapsed trajectory.
        t_collapse: Collapse time.
        index: 0-based vortex index.
        limit_point: Known limit position; estimated by extrapolation when None.
        exponent_hint: Known exponent, used as the extrapolation order.
        window: Range of ``(T - t) / T`` used for the fit.

    Returns:
        The fit of ``log|x_i(t) - x_i*|`` against ``log(T - t)``.

    Raises:
        NoCollapseError: If the record did not collapse.
        InsufficientSamplesError: If fewer than 20 samples fall in the window.
    """
    record.require_collapse()
    mask, tau = _fit_mask(record, t_collapse, window)
    if limit_point is None:
        limit = _estimate_limit_point(record, t_collapse, index, exponent_hint)
    else:
        limit = as_float_array(limit_point, "limit_point")
    gap = np.hypot(*(record.positions[mask, index, :] - limit).T)
    slope, intercept, residual = _log_log_fit(tau[mask], gap)
    times = record.times[mask]
    return HolderFit(
        index=index,
        limit_point=(float(limit[0]), float(limit[1])),
        exponent=slope,
        intercept=intercept,
        fit_residual=residual,
        sample_range=(float(times[0]), float(times[-1])),
        n_samples=int(mask.sum()),
        window=window,
    )


def relative_holder_fit(
    record: TrajectoryRecord,
    t_collapse: float,
    pair: tuple[int, int],
    *,
    window: tuple[float, float] = DEFAULT_FIT_WINDOW,
) -> HolderFit:
    """Fit the exponent of ``|x_i - x_j|`` against the time left to collapse.

    Raises:
        NoCollapseError: If the record did not collapse or the pair does not collide.
        InsufficientSamplesError: If fewer than 20 samples fall in the window.
    """
    record.require_collapse()
    i, j = pair
    clusters = collision_clusters(record)
    if j not in clusters.part_of(i):
        raise NoCollapseError(f"vortices {i} and {j} do not collide")
    mask, tau = _fit_mask(record, t_collapse, window)
    sep = record.positions[mask, i, :] - record.positions[mask, j, :]
    slope, intercept, residual = _log_log_fit(tau[mask], np.hypot(sep[:, 0], sep[:, 1]))
    times = record.times[mask]
    return HolderFit(
        index=(i, j),
        limit_point=None,
        exponent=slope,
        intercept=intercept,
        fit_residual=residual,
        sample_range=(float(times[0]), float(times[-1])),
        n_samples=int(mask.sum()),
        window=window,
    )


def extrapolate_collapse_time(
    record: TrajectoryRecord, *, exponent: float | None = None
) -> float:
    """Collapse time corrected for the finite collapse radius.

    Near a collapse ``dmin(t)**(alpha + 1)`` is close to linear in ``t``; the
    root of a least-squares line through the final decade of minimal
    distances estimates the time at which ``dmin`` reaches zero. The decade is
    widened until the sampled times resolve it.

    Args:
        record: Collapsed trajectory.
        exponent: Power applied to dmin, ``alpha + 1`` when None.

    Returns:
        The extrapolated collapse time, never earlier than the detected one.

    Raises:
        NoCollapseError: If the record did not collapse.
    """
    t_c = record.require_collapse()
    power = record.alpha + 1.0 if exponent is None else exponent
    d = record.min_distances
    t_last = float(record.times[-1])
    d_last = float(d[-1])
    resolution = 1e3 * np.finfo(np.float64).eps * max(abs(t_last), 1.0)
    for factor in (10.0, 1e2, 1e3, 1e4):
        sel = d <= factor * d_last
        offsets = record.times[sel] - t_last
        if int(sel.sum()) >= 5 and float(-offsets.min()) > resolution:
            slope, intercept = np.polyfit(offsets, d[sel] ** power, 1)
            if slope < 0:
                return max(t_c, t_last - float(intercept / slope))
    log.debug("collapse time extrapolation fell back to the detected time", t_c=t_c)
    return t_c


@dataclass(frozen=True, slots=True)
class PreventCollapseBound:
    """Explicit constants of the prevent-collapse implication.

    Attributes:
        kappa: Separation ratio ``A0 / (17 a)``.
        r: ``min(1/8, A0 / (8 a kappa) - 2)``.
        s: ``r (kappa / 8)**N``.
        C_kappa: Time constant; may underflow to zero for large N.
        log_C_kappa: Natural logarithm of C_kappa.
        C0: Cross-interaction constant.
        C1: Uniform drift constant.
        alpha: Kernel exponent.
        n: Number of vortices.
    """

    kappa: float
    r: float
    s: float
    C_kappa: float
    log_C_kappa: float
    C0: float
    C1: float
    alpha: float
    n: int


def prevent_collapse_constant(
    intensities: Iterable[float],
    alpha: float,
    C0: float,
    C1: float,
    N: int | None = None,
) -> PreventCollapseBound:
    """Evaluate kappa, r, s and C_kappa.

    ``C_kappa = 1/2 min{a kappa**-alpha / (2**alpha A0 C0) s**((N-2)(alpha+1)),
    a / (A0 C1) s**(N-2)}``, where a term with a zero constant is infinite.
    The minimum is taken on logarithms so that tiny constants stay usable.

    Args:
        intensities: Vortex intensities.
        alpha: Kernel exponent.
        C0: Cross-interaction constant, nonnegative.
        C1: Uniform drift constant, nonnegative.
        N: Number of vortices, ``len(intensities)`` when None.

    Returns:
        The bound.

    Raises:
        DegenerateIntensitiesError: If A0 = 0 or C0 = C1 = 0.
    """
    a_vec = as_float_array(list(intensities), "intensities")
    n = a_vec.shape[0] if N is None else N
    if C0 < 0 or C1 < 0 or alpha < 0:
        raise DomainError("C0, C1 and alpha must be nonnegative")
    if C0 == 0 and C1 == 0:
        raise DegenerateIntensitiesError("C0 = C1 = 0: every vortex is motionless")
    params = degeneracy_params(a_vec)
    if not params.sub_clusters_non_neutral:
        raise DegenerateIntensitiesError("A0 = 0: a strict sub-cluster is neutral")
    a, a0 = params.a_abs_sum, params.A0
    kappa = a0 / (17.0 * a)
    r = min(0.125, a0 / (8.0 * a * kappa) - 2.0)
    log_s = math.log(r) + n * math.log(kappa / 8.0)
    terms = [math.inf, math.inf]
    if C0 > 0:
        terms[0] = (
            math.log(a)
            - alpha * math.log(kappa)
            - alpha * math.log(2.0)
            - math.log(a0)
            - math.log(C0)
            + (n - 2) * (alpha + 1.0) * log_s
        )
    if C1 > 0:
        terms[1] = math.log(a) - math.log(a0) - math.log(C1) + (n - 2) * log_s
    log_c = math.log(0.5) + min(terms)
    return PreventCollapseBound(
        kappa=kappa,
        r=r,
        s=math.exp(log_s),
        C_kappa=math.exp(log_c),
        log_C_kappa=log_c,
        C0=C0,
        C1=C1,
        alpha=alpha,
        n=n,
    )


@dataclass(frozen=True, slots=True)
class Counterexample:
    """A pair that starts at least eta apart and later comes within eta / 2."""

    pair: tuple[int, int]
    t: float
    tau: float
    distance_at_t: float
    distance_at_tau: float


@dataclass(frozen=True, slots=True)
class PreventCollapseVerdict:
    """Outcome of scanning a record for counterexamples."""

    passed: bool
    eta: float
    premise_samples: int
    premise_pairs: int
    counterexample: Counterexample | None = None


def check_prevent_collapse_implication(
    record: TrajectoryRecord, bound: PreventCollapseBound, eta: float
) -> PreventCollapseVerdict:
    """Scan a record for counterexamples to the prevent-collapse implication.

    ``T`` is the last sampled time. A sample qualifies when ``T - t <=
    C_kappa eta**(alpha + 1)``; every pair at least ``eta`` apart there must
    stay at least ``eta / 2`` apart at every later sample.

    Args:
        record: Any trajectory.
        bound: Constants from ``prevent_collapse_constant``.
        eta: Separation in (0, 1].

    Returns:
        The verdict with the earliest counterexample, if any.

    Raises:
        DomainError: If eta is outside (0, 1].
    """
    if not 0 < eta <= 1:
        raise DomainError(f"eta must lie in (0, 1], got {eta}")
    n = record.n_vortices
    if n < 2:
        return PreventCollapseVerdict(passed=True, eta=eta, premise_samples=0, premise_pairs=0)

    t_end = float(record.times[-1])
    with np.errstate(divide="ignore"):
        log_left = np.log(t_end - record.times)
    qualifies = log_left <= bound.log_C_kappa + (bound.alpha + 1.0) * math.log(eta)
    dist = np.array([pdist(p) for p in record.positions])
    later_min = np.minimum.accumulate(dist[::-1], axis=0)[::-1]
    pairs_i, pairs_j = np.triu_indices(n, k=1)

    premise_pairs = 0
    for k in np.flatnonzero(qualifies):
        apart = dist[k] >= eta
        premise_pairs += int(apart.sum())
        broken = np.flatnonzero(apart & (later_min[k] < 0.5 * eta))
        if broken.size:
            p = int(broken[0])
            tau_idx = k + int(np.argmin(dist[k:, p]))
            example = Counterexample(
                pair=(int(pairs_i[p]), int(pairs_j[p])),
                t=float(record.times[k]),
                tau=float(record.times[tau_idx]),
                distance_at_t=float(dist[k, p]),
                distance_at_tau=float(dist[tau_idx, p]),
            )
            log.warning("prevent-collapse counterexample", pair=example.pair, t=example.t)
            return PreventCollapseVerdict(
                passed=False,
                eta=eta,
                premise_samples=int(qualifies.sum()),
                premise_pairs=premise_pairs,
                counterexample=example,
            )
    return PreventCollapseVerdict(
        passed=True,
        eta=eta,
        premise_samples=int(qualifies.sum()),
        premise_pairs=premise_pairs,
    )


@dataclass(frozen=True, slots=True)
class QuasiPreservationReport:
    """Largest ratio of the measured barycenter speed to its bound."""

    max_ratio: float
    worst_time: float | None


def quasi_preservation_check(
    record: TrajectoryRecord, subset: Iterable[int]
) -> QuasiPreservationReport:
    """Compare finite-difference barycenter speeds with their bound.

    Args:
        record: Any trajectory with at least three samples.
        subset: Nonempty cluster of 0-based indices.

    Returns:
        The largest ratio over the samples; 0 when the bound vanishes
        identically (the full index set).

    Raises:
        NeutralClusterError: If the cluster intensity sums to zero.
    """
    members = sorted(set(subset))
    if not members or members[0] < 0 or members[-1] >= record.n_vortices:
        raise DomainError("subset must be a nonempty set of valid indices")
    a = record.intensities
    weight = float(a[members].sum())
    if abs(weight) <= _NEUTRAL_TOL * float(np.abs(a).sum()):
        raise NeutralClusterError("cluster has zero total intensity")
    if record.times.size < 3:
        raise InsufficientSamplesError("finite differences need at least three samples")

    centers = np.einsum("k,skj->sj", a[members], record.positions[:, members, :]) / weight
    speed = np.hypot(*np.gradient(centers, record.times, axis=0).T)
    bounds = np.array([barycenter_speed_bound(s, members) for s in record.states])
    if not np.any(bounds > 0):
        return QuasiPreservationReport(max_ratio=0.0, worst_time=None)
    ratios = np.where(bounds > 0, speed / np.where(bounds > 0, bounds, 1.0), 0.0)
    k = int(np.argmax(ratios))
    return QuasiPreservationReport(max_ratio=float(ratios[k]), worst_time=float(record.times[k]))
