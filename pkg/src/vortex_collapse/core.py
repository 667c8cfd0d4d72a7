"""Evaluation of the alpha point-vortex field, its invariants and cluster quantities.

The kernel profile ``K_alpha`` satisfies ``K_alpha'(r) = r**-alpha`` and is
normalized by ``K_alpha(1) = 0``:

    K_1(r) = ln r,    K_alpha(r) = (r**(1 - alpha) - 1) / (1 - alpha).

Vortex ``i`` moves with

    dx_i/dt = sum_{j != i} a_j (x_i - x_j)^perp / |x_i - x_j|**(alpha + 1),

where ``(u, v)^perp = (-v, u)``. All functions here are pure.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from vortex_collapse.exceptions import (
    DegenerateIntensitiesError,
    DomainError,
    NeutralClusterError,
    SingularConfigurationError,
    SizeLimitError,
)
from vortex_collapse.state import (
    DegeneracyParams,
    FloatArray,
    IndexArray,
    InvariantSample,
    VortexState,
    as_float_array,
)

__all__ = [
    "DEFAULT_DISTANCE_FLOOR",
    "MAX_SUBSET_VORTICES",
    "KernelProfile",
    "barycenter_speed_bound",
    "barycenter_velocity",
    "cluster_barycenter",
    "degeneracy_params",
    "hamiltonian",
    "invariants",
    "kernel_value",
    "min_pair_distance",
    "momentum",
    "pair_moment",
    "perp",
    "planar_rhs",
    "scaling_functionals",
    "symplectic_gradient",
    "uniform_cross_constant",
    "velocity_field",
    "vorticity_vector",
]

DEFAULT_DISTANCE_FLOOR = 1e-30
MAX_SUBSET_VORTICES = 25
_NEUTRAL_TOL = 1e-14


@dataclass(frozen=True, slots=True)
class KernelProfile:
    """Kernel profile K_alpha with its derivative r**-alpha."""

    alpha: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise DomainError(f"alpha must be finite and nonnegative, got {self.alpha}")

    def value(self, r: float) -> float:
        """K_alpha(r)."""
        return kernel_value(self.alpha, r)

    def derivative(self, r: float) -> float:
        """K_alpha'(r) = r**-alpha."""
        if not r > 0:
            raise DomainError(f"kernel profile needs r > 0, got {r}")
        return float(r ** (-self.alpha))


def _kernel(alpha: float, r: FloatArray) -> FloatArray:
    """Vectorized K_alpha on positive distances."""
    log_r = np.log(r)
    if alpha == 1.0:
        return log_r
    return np.expm1((1.0 - alpha) * log_r) / (1.0 - alpha)


def kernel_value(alpha: float, r: float) -> float:
    """Evaluate the kernel profile.

    Args:
        alpha: Nonnegative kernel exponent.
        r: Positive distance.

    Returns:
        ``ln r`` for alpha = 1, ``(r**(1 - alpha) - 1) / (1 - alpha)`` otherwise.

    Raises:
        DomainError: If r is not a positive finite number or alpha < 0.
    """
    if not (np.isfinite(r) and r > 0):
        raise DomainError(f"kernel profile is not finite at r = {r}")
    if not (np.isfinite(alpha) and alpha >= 0):
        raise DomainError(f"alpha must be finite and nonnegative, got {alpha}")
    return float(_kernel(float(alpha), np.asarray(r, dtype=np.float64)))


def perp(v: FloatArray) -> FloatArray:
    """Rotate planar vectors (last axis) by +90 degrees."""
    out = np.empty_like(v)
    out[..., 0] = -v[..., 1]
    out[..., 1] = v[..., 0]
    return out


def _pair_differences(
    positions: FloatArray, distance_floor: float
) -> tuple[FloatArray, FloatArray]:
    """Return ``x_i - x_j`` and ``|x_i - x_j|`` with ones on the diagonal."""
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    np.fill_diagonal(dist, 1.0)
    smallest = float(dist.min()) if dist.shape[0] > 1 else 1.0
    if smallest < distance_floor:
        raise SingularConfigurationError(
            f"pairwise distance {smallest:.3e} is below the floor {distance_floor:.1e}"
        )
    return diff, dist


def planar_rhs(
    positions: FloatArray,
    intensities: FloatArray,
    alpha: float,
    distance_floor: float = DEFAULT_DISTANCE_FLOOR,
) -> FloatArray:
    """Velocity of every vortex from raw arrays; the integrator's right-hand side."""
    diff, dist = _pair_differences(positions, distance_floor)
    weights = intensities[None, :] * dist ** (-(alpha + 1.0))
    np.fill_diagonal(weights, 0.0)
    return np.einsum("ij,ijk->ik", weights, perp(diff))


def velocity_field(
    state: VortexState, *, distance_floor: float = DEFAULT_DISTANCE_FLOOR
) -> FloatArray:
    """Evaluate the alpha point-vortex field.

    Args:
        state: Vortex configuration.
        distance_floor: Smallest admissible pair distance.

    Returns:
        Array of shape (N, 2) with the velocity of each vortex.

    Raises:
        SingularConfigurationError: If two vortices are closer than the floor.
    """
    return planar_rhs(state.positions, state.intensities, state.alpha, distance_floor)


def symplectic_gradient(
    state: VortexState, *, distance_floor: float = DEFAULT_DISTANCE_FLOOR
) -> FloatArray:
    """Gradient of the Hamiltonian with respect to each position.

    The dynamics are ``a_i dx_i/dt = perp(grad_i H)``.
    """
    diff, dist = _pair_differences(state.positions, distance_floor)
    a = state.intensities
    weights = np.outer(a, a) * dist ** (-(state.alpha + 1.0))
    np.fill_diagonal(weights, 0.0)
    return np.einsum("ij,ijk->ik", weights, diff)


def _pair_products(intensities: FloatArray) -> FloatArray:
    """a_i a_j for i < j in condensed order."""
    i, j = np.triu_indices(intensities.shape[0], k=1)
    return intensities[i] * intensities[j]


def _pair_distances(state: VortexState, distance_floor: float) -> FloatArray:
    """Condensed pair distances, checked against the floor."""
    d = pdist(state.positions)
    if d.size and float(d.min()) < distance_floor:
        raise SingularConfigurationError(
            f"pairwise distance {float(d.min()):.3e} is below the floor {distance_floor:.1e}"
        )
    return d


def hamiltonian(
    state: VortexState, *, distance_floor: float = DEFAULT_DISTANCE_FLOOR
) -> float:
    """Return H = 1/2 sum_{i != j} a_i a_j K_alpha(|x_i - x_j|).

    Raises:
        SingularConfigurationError: If two vortices are closer than the floor.
    """
    d = _pair_distances(state, distance_floor)
    return float(np.sum(_pair_products(state.intensities) * _kernel(state.alpha, d)))


def vorticity_vector(state: VortexState) -> FloatArray:
    """M = sum a_i x_i."""
    return np.asarray(state.intensities @ state.positions, dtype=np.float64)


def momentum(state: VortexState) -> float:
    """I = sum a_i |x_i|^2."""
    return float(state.intensities @ np.einsum("ij,ij->i", state.positions, state.positions))


def pair_moment(state: VortexState) -> float:
    """L = sum_{i != j} a_i a_j |x_i - x_j|^2."""
    d = pdist(state.positions, "sqeuclidean")
    return float(2.0 * np.sum(_pair_products(state.intensities) * d))


def min_pair_distance(positions: FloatArray) -> float:
    """Smallest pairwise distance, ``inf`` for a single vortex."""
    if positions.shape[0] < 2:
        return float("inf")
    return float(pdist(positions).min())


def invariants(state: VortexState) -> InvariantSample:
    """Evaluate every monitored functional of a planar state."""
    m = vorticity_vector(state)
    return InvariantSample(
        hamiltonian=hamiltonian(state),
        vorticity_vector=(float(m[0]), float(m[1])),
        momentum=momentum(state),
        pair_moment=pair_moment(state),
        min_pair_distance=min_pair_distance(state.positions),
    )


def scaling_functionals(state: VortexState) -> tuple[float, float]:
    """Return the two scale functionals of a configuration.

    ``Lambda_alpha = sum_{i != j} a_i a_j l_ij**-alpha`` and
    ``Lambda'_alpha = sum_{i != j} a_i a_j l_ij**(1 - alpha)``. The second is
    ``d H(mu X) / d ln mu`` at ``mu = 1`` and reduces to ``sum_{i != j} a_i a_j``
    at alpha = 1.
    """
    d = _pair_distances(state, DEFAULT_DISTANCE_FLOOR)
    prods = _pair_products(state.intensities)
    lam = 2.0 * float(np.sum(prods * d ** (-state.alpha)))
    lam_prime = 2.0 * float(np.sum(prods * d ** (1.0 - state.alpha)))
    return lam, lam_prime


def _subset_sums(values: FloatArray) -> FloatArray:
    """All subset sums; bit k of the index selects ``values[k]``."""
    sums = np.zeros(1)
    for v in values:
        sums = np.concatenate([sums, sums + v])
    return sums


def _closest_to_zero(left: FloatArray, right_sorted: FloatArray) -> float:
    """min |l + r| over l in left, r in right_sorted."""
    if left.size == 0:
        return float("inf")
    idx = np.searchsorted(right_sorted, -left)
    lo = np.clip(idx - 1, 0, right_sorted.size - 1)
    hi = np.clip(idx, 0, right_sorted.size - 1)
    best = np.minimum(np.abs(left + right_sorted[lo]), np.abs(left + right_sorted[hi]))
    return float(best.min())


def degeneracy_params(intensities: Iterable[float]) -> DegeneracyParams:
    """Compute the degeneracy parameters A, A0, a and a0.

    Subset sums are split in two halves and matched with a sorted search,
    which keeps the scan at about 2**(N/2) per half.

    Args:
        intensities: Nonzero intensities a_1..a_N.

    Returns:
        The degeneracy parameters.

    Raises:
        SizeLimitError: If N > 25.
        DomainError: If the intensity list is empty.
    """
    a = as_float_array(list(intensities), "intensities")
    n = a.shape[0]
    if n == 0:
        raise DomainError("at least one intensity is required")
    if n > MAX_SUBSET_VORTICES:
        raise SizeLimitError(
            f"subset enumeration supports N <= {MAX_SUBSET_VORTICES}, got {n}"
        )

    a_abs_sum = float(np.abs(a).sum())
    a_total_abs = abs(float(a.sum()))
    if n == 1:
        return DegeneracyParams(
            A=min(a_abs_sum, a_total_abs),
            A0=a_abs_sum,
            a_abs_sum=a_abs_sum,
            a_total_abs=a_total_abs,
        )

    half = n // 2
    left = _subset_sums(a[:half])
    right = _subset_sums(a[half:])
    right_sorted = np.sort(right)
    # empty+empty and full+full are excluded; handle their left rows by hand.
    a0 = min(
        _closest_to_zero(left[1:-1], right_sorted),
        float(np.abs(right[1:]).min()),
        float(np.abs(left[-1] + right[:-1]).min()),
    )
    return DegeneracyParams(
        A=min(a0, a_total_abs),
        A0=a0,
        a_abs_sum=a_abs_sum,
        a_total_abs=a_total_abs,
    )


def _subset_index(state: VortexState, subset: Iterable[int]) -> IndexArray:
    """Validated sorted index array of a nonempty subset."""
    idx = np.array(sorted(set(subset)), dtype=np.intp)
    if idx.size == 0:
        raise DomainError("subset must be nonempty")
    if idx[0] < 0 or idx[-1] >= state.n:
        raise DomainError(f"subset indices must lie in [0, {state.n})")
    return idx


def _cluster_intensity(state: VortexState, idx: IndexArray) -> float:
    """Total intensity of a cluster, rejecting neutral clusters."""
    total = float(state.intensities[idx].sum())
    if abs(total) <= _NEUTRAL_TOL * float(np.abs(state.intensities).sum()):
        raise NeutralClusterError("cluster has zero total intensity")
    return total


def cluster_barycenter(state: VortexState, subset: Iterable[int]) -> FloatArray:
    """Center of vorticity of a cluster.

    Args:
        state: Vortex configuration.
        subset: Nonempty set of 0-based vortex indices.

    Returns:
        B_P = (sum_P a_i)^-1 sum_P a_i x_i.

    Raises:
        NeutralClusterError: If the cluster intensity sums to zero.
    """
    idx = _subset_index(state, subset)
    total = _cluster_intensity(state, idx)
    return np.asarray(state.intensities[idx] @ state.positions[idx] / total)


def barycenter_velocity(state: VortexState, subset: Iterable[int]) -> FloatArray:
    """dB_P/dt from the velocity field."""
    idx = _subset_index(state, subset)
    total = _cluster_intensity(state, idx)
    v = velocity_field(state)
    return np.asarray(state.intensities[idx] @ v[idx] / total)


def barycenter_speed_bound(state: VortexState, subset: Iterable[int]) -> float:
    """Upper bound on |dB_P/dt| from the cross-cluster interactions.

    Returns ``sum_{i in P} sum_{j not in P} C0 / |x_i - x_j|**alpha`` with
    ``C0 = a * max|a_j| / |sum_P a_k|``; internal pairs cancel in dB_P/dt.

    Raises:
        NeutralClusterError: If the cluster intensity sums to zero.
        SingularConfigurationError: If two vortices are closer than the floor.
    """
    idx = _subset_index(state, subset)
    total = _cluster_intensity(state, idx)
    outside = np.setdiff1d(np.arange(state.n), idx)
    if outside.size == 0:
        return 0.0
    abs_a = np.abs(state.intensities)
    c0 = float(abs_a.sum() * abs_a.max() / abs(total))
    _, dist = _pair_differences(state.positions, DEFAULT_DISTANCE_FLOOR)
    cross = dist[np.ix_(idx, outside)]
    return c0 * float(np.sum(cross ** (-state.alpha)))


def uniform_cross_constant(intensities: Iterable[float]) -> float:
    """C0 valid for every nonempty strict cluster: a * max|a_j| / A0.

    Raises:
        DegenerateIntensitiesError: If some strict sub-cluster is neutral.
    """
    a = as_float_array(list(intensities), "intensities")
    params = degeneracy_params(a)
    if not params.sub_clusters_non_neutral:
        raise DegenerateIntensitiesError("A0 = 0: a strict sub-cluster is neutral")
    return params.a_abs_sum * float(np.abs(a).max()) / params.A0
