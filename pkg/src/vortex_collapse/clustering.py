"""Cluster partitions certified by distance bounds, and collision clusters of a run."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import pdist, squareform

from vortex_collapse.exceptions import DomainError, InvalidStateError
from vortex_collapse.logger import get_logger
from vortex_collapse.state import FloatArray, as_float_array

if TYPE_CHECKING:
    from numpy.typing import ArrayLike

    from vortex_collapse.trajectory import TrajectoryRecord

__all__ = [
    "BallsCover",
    "ClusterPartition",
    "CollisionClusters",
    "balls_cover",
    "cluster_partition",
    "collision_clusters",
]

log = get_logger(__name__)

type Parts = tuple[frozenset[int], ...]

_DEFAULT_WINDOW_FRACTION = 1e-3
_THRESHOLD_FACTOR = 2.0


def _points(points: ArrayLike) -> FloatArray:
    pts = as_float_array(points, "points")
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
        raise InvalidStateError("points must have shape (N, 2) with N >= 1")
    return pts


def _sorted_parts(labels: list[list[int]]) -> Parts:
    return tuple(frozenset(p) for p in sorted(labels, key=min))


@dataclass(frozen=True, slots=True)
class BallsCover:
    """Result of the iterative ball-merging construction.

    Attributes:
        delta: Final radius.
        representatives: Indices whose delta-balls cover every eps-ball.
        iterations: Number of merges performed.
        removed: Indices dropped, in removal order.
    """

    delta: float
    representatives: frozenset[int]
    iterations: int
    removed: tuple[int, ...]


def balls_cover(points: ArrayLike, eps: float, kappa: float) -> BallsCover:
    """Merge close balls until the representatives are well separated.

    While two representatives are closer than ``delta / kappa``, the higher
    index of the lexicographically smallest such pair is dropped and ``delta``
    grows by ``2 / kappa``.

    Args:
        points: Array of shape (N, 2).
        eps: Initial radius, positive.
        kappa: Separation ratio in (0, 1/2].

    Returns:
        The cover with ``eps <= delta < (kappa / 2)**-N * eps``.

    Raises:
        DomainError: If eps or kappa is outside its domain.
    """
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    if not 0 < kappa <= 0.5:
        raise DomainError(f"kappa must lie in (0, 1/2], got {kappa}")
    dist = squareform(pdist(_points(points)))
    alive = list(range(dist.shape[0]))
    delta = eps
    removed: list[int] = []
    while True:
        sub = dist[np.ix_(alive, alive)]
        close = np.argwhere(np.triu(sub < delta / kappa, k=1))
        if close.size == 0:
            break
        # argwhere is row-major, so the first hit is the smallest pair
        drop = alive[int(close[0][1])]
        alive.remove(drop)
        removed.append(drop)
        delta *= 2.0 / kappa
    return BallsCover(
        delta=delta,
        representatives=frozenset(alive),
        iterations=len(removed),
        removed=tuple(removed),
    )


@dataclass(frozen=True, slots=True)
class ClusterPartition:
    """Partition of vortex indices with intra-cluster diameter ``delta`` and
    inter-cluster gaps at least ``delta / kappa``."""

    parts: Parts
    delta: float
    kappa: float

    def label_of(self, index: int) -> int:
        """Position in ``parts`` of the part containing ``index``."""
        for k, part in enumerate(self.parts):
            if index in part:
                return k
        raise DomainError(f"index {index} is not in the partition")

    def certify(self, points: ArrayLike) -> bool:
        """Re-check both distance inequalities against ``points``."""
        dist = squareform(pdist(_points(points)))
        n = dist.shape[0]
        covered = sorted(i for part in self.parts for i in part)
        if covered != list(range(n)):
            return False
        labels = np.empty(n, dtype=np.intp)
        for k, part in enumerate(self.parts):
            labels[list(part)] = k
        same = labels[:, None] == labels[None, :]
        intra_ok = bool(np.all(dist[same] <= self.delta))
        inter_ok = bool(np.all(dist[~same] >= self.delta / self.kappa))
        return intra_ok and inter_ok


def cluster_partition(points: ArrayLike, d: float, kappa: float) -> ClusterPartition:
    """Partition points into clusters of diameter delta separated by delta / kappa.

    Runs the ball-merging construction with ``eps = 1/2 (kappa / 8)**N d`` and
    ``kappa' = (2 / kappa + 2)**-1``, then groups every point with the
    representative within ``delta'``; the partition radius is ``2 delta'``.

    Args:
        points: Array of shape (N, 2).
        d: Scale, positive.
        kappa: Ratio in (0, 1).

    Returns:
        A partition with ``1/2 (kappa / 8)**N d <= delta < d``.

    Raises:
        DomainError: If d or kappa is outside its domain.
    """
    if not d > 0:
        raise DomainError(f"d must be positive, got {d}")
    if not 0 < kappa < 1:
        raise DomainError(f"kappa must lie in (0, 1), got {kappa}")
    pts = _points(points)
    n = pts.shape[0]
    eps = 0.5 * (kappa / 8.0) ** n * d
    inner_kappa = 1.0 / (2.0 / kappa + 2.0)
    cover = balls_cover(pts, eps, inner_kappa)
    dist = squareform(pdist(pts))
    groups = [
        [j for j in range(n) if dist[i, j] <= cover.delta]
        for i in sorted(cover.representatives)
    ]
    return ClusterPartition(parts=_sorted_parts(groups), delta=2.0 * cover.delta, kappa=kappa)


@dataclass(frozen=True, slots=True)
class CollisionClusters:
    """Vortices grouped by collision at the end of a collapsed run.

    Attributes:
        parts: Groups of 0-based indices that come together.
        threshold: Distance below which a pair counts as colliding.
        window: Length of the final time window that was inspected.
        separation_floor: Smallest distance between different groups over
            the whole record, None for a single group.
    """

    parts: Parts
    threshold: float
    window: float
    separation_floor: float | None

    def part_of(self, index: int) -> frozenset[int]:
        for part in self.parts:
            if index in part:
                return part
        raise DomainError(f"index {index} is not in the partition")


def collision_clusters(
    record: TrajectoryRecord, window: float | None = None
) -> CollisionClusters:
    """Group vortices whose distance falls to the collision threshold.

    A pair is linked when its smallest distance over the final ``window`` of
    the run is at most twice the collapse radius; groups are the single-linkage
    closure of that relation.

    Args:
        record: A collapsed trajectory.
        window: Final time window, ``1e-3`` of the run length when None.

    Returns:
        The collision groups and their empirical separation floor.

    Raises:
        NoCollapseError: If the record did not terminate by collapse.
    """
    t_c = record.require_collapse()
    if window is None:
        window = _DEFAULT_WINDOW_FRACTION * (t_c - float(record.times[0]))
    if not window > 0:
        raise DomainError(f"window must be positive, got {window}")
    threshold = _THRESHOLD_FACTOR * record.collapse_radius
    n = record.n_vortices
    if n == 1:
        return CollisionClusters(
            parts=(frozenset({0}),), threshold=threshold, window=window, separation_floor=None
        )

    pair_dist = np.array([pdist(p) for p in record.positions])
    tail = record.times >= t_c - window
    closest = pair_dist[tail].min(axis=0)
    labels = fcluster(linkage(closest, method="single"), t=threshold, criterion="distance")

    groups: dict[int, list[int]] = {}
    for i, label in enumerate(labels):
        groups.setdefault(int(label), []).append(i)
    parts = _sorted_parts(list(groups.values()))

    floor: float | None = None
    if len(parts) > 1:
        i, j = np.triu_indices(n, k=1)
        across = labels[i] != labels[j]
        floor = float(pair_dist[:, across].min())

    log.debug("collision clusters", parts=[sorted(p) for p in parts], floor=floor)
    return CollisionClusters(parts=parts, threshold=threshold, window=window, separation_floor=floor)
