"""Euler point vortices in the open unit disc.

Points of the plane are identified with complex numbers. The disc Green
function and its regular (Robin) part are

    G(x, y) = (1 / 2 pi) ln(|1 - x conj(y)| / |x - y|),
    gamma(x, y) = (1 / 2 pi) ln|1 - x conj(y)|,

so that ``G = gamma - (1 / 2 pi) ln|x - y|`` and ``G`` vanishes on the circle.
Vortices move with the flow whose stream function is ``-sum_j a_j G(., x_j)``:

    dx_i/dt = (1 / 2 pi) sum_{j != i} a_j (x_i - x_j)^perp / |x_i - x_j|^2
              - sum_j a_j perp(grad_x gamma(x_i, x_j)).

With this sign the boundary carries no normal flux and a single positive
vortex turns counter-clockwise, the same sense as a positive planar pair.
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING

import numpy as np

from vortex_collapse.analysis import HolderFit, holder_fit
from vortex_collapse.core import (
    DEFAULT_DISTANCE_FLOOR,
    min_pair_distance,
    momentum,
    pair_moment,
    vorticity_vector,
)
from vortex_collapse.exceptions import (
    DomainError,
    InvalidStateError,
    PreconditionError,
    SingularConfigurationError,
)
from vortex_collapse.logger import get_logger
from vortex_collapse.state import DiscState, FloatArray, InvariantSample, VortexState

if TYPE_CHECKING:
    from numpy.typing import ArrayLike

    from vortex_collapse.trajectory import TrajectoryRecord

__all__ = [
    "ROBIN_GRADIENT_CONSTANT",
    "boundary_holder_check",
    "calibrate_robin_constant",
    "disc_hamiltonian",
    "disc_induced_velocity",
    "disc_invariants",
    "disc_rhs",
    "disc_velocity_field",
    "green_disc",
    "robin_disc",
    "robin_gradient_disc",
    "robin_self_gradient",
]

log = get_logger(__name__)

_TWO_PI = 2.0 * math.pi
# |grad_x gamma(x, y)| * (1 - |x|) <= |y| / 2 pi < 1 / 2 pi on the disc.
ROBIN_GRADIENT_CONSTANT = 1.0 / _TWO_PI
_ADHERENCE_FACTOR = 10.0
_EXPECTED_EXPONENT = 0.5


def _as_complex(p: ArrayLike) -> complex:
    """Planar point as a complex number."""
    x, y = np.asarray(p, dtype=np.float64)
    return complex(x, y)


def _interior(z: complex, name: str) -> complex:
    if not abs(z) < 1.0:
        raise DomainError(f"{name} = {z} is not inside the unit disc")
    return z


def _to_planar(z: complex | np.complex128) -> FloatArray:
    return np.array([z.real, z.imag])


def green_disc(x: ArrayLike, y: ArrayLike) -> float:
    """Green function of the unit disc.

    Args:
        x: Interior point.
        y: Interior point distinct from ``x``.

    Returns:
        ``(1 / 2 pi) ln(|1 - x conj(y)| / |x - y|)``.

    Raises:
        DomainError: If a point is not inside the disc.
        InvalidStateError: If ``x == y``.
    """
    zx = _interior(_as_complex(x), "x")
    zy = _interior(_as_complex(y), "y")
    if zx == zy:
        raise InvalidStateError("the Green function is singular at x = y")
    return math.log(abs(1.0 - zx * zy.conjugate()) / abs(zx - zy)) / _TWO_PI


def robin_disc(x: ArrayLike, y: ArrayLike | None = None) -> float:
    """Regular part gamma(x, y); the diagonal gamma(x, x) when ``y`` is None.

    Raises:
        DomainError: If a point is not inside the disc.
    """
    zx = _interior(_as_complex(x), "x")
    if y is None:
        return math.log1p(-(abs(zx) ** 2)) / _TWO_PI
    zy = _interior(_as_complex(y), "y")
    return math.log(abs(1.0 - zx * zy.conjugate())) / _TWO_PI


def robin_gradient_disc(x: ArrayLike, y: ArrayLike) -> FloatArray:
    """Gradient of gamma(., y) at ``x``: ``-y / (2 pi conj(1 - x conj(y)))``.

    Raises:
        DomainError: If a point is not inside the disc.
    """
    zx = _interior(_as_complex(x), "x")
    zy = _interior(_as_complex(y), "y")
    return _to_planar(-zy / (_TWO_PI * (1.0 - zx * zy.conjugate()).conjugate()))


def robin_self_gradient(x: ArrayLike) -> FloatArray:
    """Half the gradient of the diagonal x -> gamma(x, x)."""
    zx = _interior(_as_complex(x), "x")
    return _to_planar(-zx / (_TWO_PI * (1.0 - abs(zx) ** 2)))


def _complex_positions(positions: FloatArray) -> FloatArray:
    return np.asarray(positions[:, 0] + 1j * positions[:, 1])


def _field_at(
    targets: FloatArray,
    sources: FloatArray,
    intensities: FloatArray,
    *,
    skip_diagonal: bool,
    distance_floor: float,
) -> FloatArray:
    """Induced velocity at complex ``targets`` as a complex array."""
    diff = targets[:, None] - sources[None, :]
    dist2 = np.abs(diff) ** 2
    if skip_diagonal:
        np.fill_diagonal(dist2, 1.0)
    if dist2.size and float(np.sqrt(dist2.min())) < distance_floor:
        raise SingularConfigurationError(
            f"pairwise distance below the floor {distance_floor:.1e}"
        )
    planar = 1j * diff / dist2
    if skip_diagonal:
        np.fill_diagonal(planar, 0.0)
    grad_gamma = -sources[None, :] / np.conj(1.0 - targets[:, None] * np.conj(sources[None, :]))
    kernel = planar / _TWO_PI - 1j * grad_gamma / _TWO_PI
    return np.asarray(kernel @ intensities)


def disc_rhs(
    positions: FloatArray,
    intensities: FloatArray,
    distance_floor: float = DEFAULT_DISTANCE_FLOOR,
) -> FloatArray:
    """Disc velocity of every vortex from raw arrays; the integrator's right-hand side."""
    z = _complex_positions(positions)
    w = _field_at(z, z, intensities, skip_diagonal=True, distance_floor=distance_floor)
    return np.stack([w.real, w.imag], axis=1)


def disc_velocity_field(state: DiscState) -> FloatArray:
    """Velocity of each vortex in the unit disc.

    Args:
        state: Configuration strictly inside the disc.

    Returns:
        Array of shape (N, 2).

    Raises:
        SingularConfigurationError: If two vortices are closer than the floor.
    """
    gap = 1.0 - float(np.hypot(state.positions[:, 0], state.positions[:, 1]).max())
    if gap < 1e-6:
        log.warning("vortex close to the boundary", distance=gap)
    return disc_rhs(state.positions, state.intensities)


def disc_induced_velocity(state: DiscState, points: ArrayLike) -> FloatArray:
    """Flow velocity at arbitrary closed-disc points distinct from the vortices."""
    p = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if np.any(np.hypot(p[:, 0], p[:, 1]) > 1.0 + 1e-12):
        raise DomainError("evaluation points must lie in the closed unit disc")
    w = _field_at(
        _complex_positions(p),
        _complex_positions(state.positions),
        state.intensities,
        skip_diagonal=False,
        distance_floor=DEFAULT_DISTANCE_FLOOR,
    )
    return np.stack([w.real, w.imag], axis=1)


def disc_hamiltonian(state: VortexState) -> float:
    """Conserved energy ``-1/2 sum_{i != j} a_i a_j G_ij - 1/2 sum_i a_i^2 gamma(x_i, x_i)``."""
    z = _complex_positions(state.positions)
    a = state.intensities
    i, j = np.triu_indices(state.n, k=1)
    green = np.log(np.abs(1.0 - z[i] * np.conj(z[j])) / np.abs(z[i] - z[j])) / _TWO_PI
    diagonal = np.log1p(-(np.abs(z) ** 2)) / _TWO_PI
    return float(-np.sum(a[i] * a[j] * green) - 0.5 * np.sum(a**2 * diagonal))


def disc_invariants(state: VortexState) -> InvariantSample:
    """Monitored functionals of a disc state, with the disc energy as Hamiltonian."""
    m = vorticity_vector(state)
    return InvariantSample(
        hamiltonian=disc_hamiltonian(state),
        vorticity_vector=(float(m[0]), float(m[1])),
        momentum=momentum(state),
        pair_moment=pair_moment(state),
        min_pair_distance=min_pair_distance(state.positions),
    )


def calibrate_robin_constant(points: ArrayLike, partners: ArrayLike) -> float:
    """Empirical C such that |grad_x gamma(x, y)| <= C / dist(x, boundary).

    Args:
        points: Interior points x, shape (K, 2).
        partners: Interior points y, shape (M, 2).

    Returns:
        The largest ``|grad_x gamma(x, y)| * (1 - |x|)`` over all pairs.
    """
    x = _complex_positions(np.atleast_2d(np.asarray(points, dtype=np.float64)))
    y = _complex_positions(np.atleast_2d(np.asarray(partners, dtype=np.float64)))
    if np.any(np.abs(x) >= 1.0) or np.any(np.abs(y) >= 1.0):
        raise DomainError("calibration points must lie inside the unit disc")
    grad = np.abs(y[None, :] / (1.0 - x[:, None] * np.conj(y[None, :]))) / _TWO_PI
    return float(np.max(grad * (1.0 - np.abs(x))[:, None]))


def boundary_holder_check(
    record: TrajectoryRecord,
    t_collapse: float,
    index: int,
    candidate_limit: ArrayLike,
    *,
    tolerance: float = 0.02,
) -> HolderFit:
    """Fit the collapse exponent of a disc vortex against a candidate limit point.

    Args:
        record: Collapsed disc trajectory.
        t_collapse: Collapse time.
        index: 0-based vortex index.
        candidate_limit: Interior point the vortex is expected to reach.
        tolerance: Admissible relative deviation of the exponent from 1/2.

    Returns:
        The Hölder fit.

    Raises:
        PreconditionError: If no sample comes within ten collapse radii of the
            candidate or the fitted exponent is not 1/2 within ``tolerance``.
    """
    candidate = np.asarray(candidate_limit, dtype=np.float64)
    _interior(_as_complex(candidate), "candidate_limit")
    gaps = np.hypot(*(record.positions[:, index, :] - candidate).T)
    if float(gaps.min()) > _ADHERENCE_FACTOR * record.collapse_radius:
        raise PreconditionError(
            f"vortex {index} never comes within {_ADHERENCE_FACTOR:g} collapse radii "
            f"of the candidate limit (closest {float(gaps.min()):.3e})"
        )
    fit = holder_fit(record, t_collapse, index, limit_point=candidate)
    if abs(fit.exponent - _EXPECTED_EXPONENT) > tolerance * _EXPECTED_EXPONENT:
        raise PreconditionError(
            f"fitted exponent {fit.exponent:.4f} is not 1/2 within {tolerance:.0%}"
        )
    return fit
