"""Pytest fixtures for vortex_collapse tests."""

from __future__ import annotations

from collections.abc import Callable
from functools import cache

import numpy as np
import pytest

from vortex_collapse.config import Settings
from vortex_collapse.core import invariants
from vortex_collapse.integrator import IntegratorOptions, integrate
from vortex_collapse.selfsimilar import SelfSimilarSolution, build_configuration
from vortex_collapse.state import VortexState
from vortex_collapse.trajectory import (
    FieldKind,
    Termination,
    TerminationKind,
    TrajectoryRecord,
)

type SelfSimilarRun = tuple[SelfSimilarSolution, TrajectoryRecord]


@pytest.fixture
def settings() -> Settings:
    """Return test settings, ignoring any local .env file."""
    return Settings(_env_file=None, log_level="DEBUG")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


def _tail_times(t_c: float, decades: tuple[float, float] = (1.0, 15.0), n: int = 281) -> np.ndarray:
    """Sample times ``t_c (1 - 10**-k)`` accumulating at a collapse."""
    return t_c * (1.0 - np.logspace(-decades[0], -decades[1], n))


@cache
def _selfsimilar_run(alpha: float) -> SelfSimilarRun:
    sol = build_configuration(alpha)
    opts = IntegratorOptions(rel_tol=1e-12, abs_tol=1e-16, collapse_radius=sol.collapse_radius)
    record = integrate(
        sol.initial_state,
        0.0,
        1.5 * sol.T,
        opts,
        sample_times=np.concatenate([np.linspace(0.0, sol.T, 200)[1:], _tail_times(sol.T)]),
    )
    return sol, record


@pytest.fixture(scope="session")
def selfsimilar_run() -> Callable[[float], SelfSimilarRun]:
    """Integrated self-similar collapse for a given alpha, computed once per session."""
    return _selfsimilar_run


def _make_record(
    times: np.ndarray,
    positions: np.ndarray,
    intensities: np.ndarray,
    *,
    alpha: float = 1.0,
    collapse_radius: float = 1e-8,
    collapsed: bool = True,
) -> TrajectoryRecord:
    """Build a record from prescribed positions of shape (S, N, 2)."""
    states = tuple(VortexState(p, intensities, alpha) for p in positions)
    termination = (
        Termination(TerminationKind.COLLAPSED, collapse_time=float(times[-1]))
        if collapsed
        else Termination(TerminationKind.REACHED_FINAL_TIME)
    )
    return TrajectoryRecord(
        times=times,
        states=states,
        invariants=tuple(invariants(s) for s in states),
        termination=termination,
        collapse_radius=collapse_radius,
        field=FieldKind.PLANE,
    )


def _mirrored_pair(
    exponent: float = 0.5, t_c: float = 1.0, n: int = 161, radius: float = 3e-4
) -> TrajectoryRecord:
    """Two unit vortices at ``(+-(t_c - t)**exponent, 0)``, sampled log-uniformly in t_c - t."""
    tau = np.logspace(0.0, -8.0, n) * t_c
    times = t_c - tau
    r = tau**exponent
    positions = np.zeros((n, 2, 2))
    positions[:, 0, 0] = r
    positions[:, 1, 0] = -r
    return _make_record(times, positions, np.array([1.0, 1.0]), collapse_radius=radius)


@pytest.fixture
def record_factory() -> Callable[..., TrajectoryRecord]:
    """Factory building a record from prescribed positions."""
    return _make_record


@pytest.fixture
def mirrored_pair() -> Callable[..., TrajectoryRecord]:
    """Factory for a symmetric pair collapsing with a prescribed exponent."""
    return _mirrored_pair


@pytest.fixture
def tail_times() -> Callable[..., np.ndarray]:
    return _tail_times
