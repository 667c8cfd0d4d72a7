"""Value types shared by the vortex modules."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Self

import numpy as np
from numpy.typing import NDArray
from scipy.spatial.distance import pdist

from vortex_collapse.exceptions import DomainError, InvalidStateError

if TYPE_CHECKING:
    from numpy.typing import ArrayLike

__all__ = [
    "DegeneracyParams",
    "DiscState",
    "FloatArray",
    "IndexArray",
    "InvariantSample",
    "VortexState",
    "as_float_array",
]

type FloatArray = NDArray[np.float64]
type IndexArray = NDArray[np.intp]


def as_float_array(x: ArrayLike, name: str) -> FloatArray:
    """Convert input to a read-only float64 copy, rejecting non-finite values."""
    arr = np.array(x, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise InvalidStateError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, slots=True, eq=False)
class VortexState:
    """Instantaneous configuration of N point vortices.

    Attributes:
        positions: Array of shape (N, 2).
        intensities: Array of shape (N,), every entry nonzero.
        alpha: Kernel exponent, nonnegative.
    """

    positions: FloatArray
    intensities: FloatArray
    alpha: float

    def __post_init__(self) -> None:
        positions = as_float_array(self.positions, "positions")
        intensities = as_float_array(self.intensities, "intensities")
        if positions.ndim != 2 or positions.shape[1] != 2:
            raise InvalidStateError("positions must have shape (N, 2)")
        if intensities.shape != (positions.shape[0],):
            raise InvalidStateError("intensities must have shape (N,) and match positions")
        if positions.shape[0] < 1:
            raise InvalidStateError("a state needs at least one vortex")
        if np.any(intensities == 0.0):
            raise InvalidStateError("every intensity must be nonzero")
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise DomainError(f"alpha must be finite and nonnegative, got {self.alpha}")
        if positions.shape[0] > 1 and float(pdist(positions).min()) == 0.0:
            raise InvalidStateError("positions must be pairwise distinct")

        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "intensities", intensities)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def n(self) -> int:
        """Number of vortices."""
        return int(self.positions.shape[0])

    def with_positions(self, positions: ArrayLike) -> Self:
        """Return a state with the same intensities at new positions."""
        return type(self)(np.asarray(positions), self.intensities, self.alpha)

    def scaled(self, factor: float, center: ArrayLike = (0.0, 0.0)) -> Self:
        """Return the state dilated by ``factor`` about ``center``."""
        c = np.asarray(center, dtype=np.float64)
        return self.with_positions(c + factor * (self.positions - c))


@dataclass(frozen=True, slots=True, eq=False)
class DiscState(VortexState):
    """Euler (alpha = 1) configuration inside the open unit disc."""

    alpha: float = 1.0

    def __post_init__(self) -> None:
        VortexState.__post_init__(self)
        if self.alpha != 1.0:
            raise DomainError("disc dynamics are defined for alpha = 1 only")
        if np.any(np.einsum("ij,ij->i", self.positions, self.positions) >= 1.0):
            raise DomainError("every position must lie strictly inside the unit disc")


@dataclass(frozen=True, slots=True)
class DegeneracyParams:
    """Degeneracy parameters of an intensity vector.

    ``A0`` is the smallest absolute partial sum over nonempty strict subsets,
    ``A`` also includes the full sum. A single vortex has no strict subset and
    reports ``A0 = a_abs_sum``.
    """

    A: float
    A0: float
    a_abs_sum: float
    a_total_abs: float

    @property
    def non_neutral(self) -> bool:
        """Every nonempty subset has nonzero intensity sum."""
        return self.A > 0

    @property
    def sub_clusters_non_neutral(self) -> bool:
        """Every nonempty strict subset has nonzero intensity sum."""
        return self.A0 > 0


@dataclass(frozen=True, slots=True)
class InvariantSample:
    """Conserved functionals and the minimal pair distance of one sample."""

    hamiltonian: float
    vorticity_vector: tuple[float, float]
    momentum: float
    pair_moment: float
    min_pair_distance: float
