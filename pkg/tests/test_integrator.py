"""Tests for the adaptive integrator, collapse detection and drift reports."""

from __future__ import annotations

import math
from collections.abc import Callable

import numpy as np
import pytest

from vortex_collapse.analysis import (
    check_prevent_collapse_implication,
    prevent_collapse_constant,
    quasi_preservation_check,
)
from vortex_collapse.core import uniform_cross_constant
from vortex_collapse.exceptions import DomainError, NoCollapseError
from vortex_collapse.integrator import (
    IntegratorOptions,
    identity_residual,
    integrate,
    invariant_drift,
    refine_collapse_time,
)
from vortex_collapse.selfsimilar import SelfSimilarSolution, build_configuration
from vortex_collapse.state import VortexState
from vortex_collapse.trajectory import TerminationKind, TrajectoryRecord

_TIGHT = IntegratorOptions(rel_tol=1e-12, abs_tol=1e-14)


def _co_rotating_pair() -> VortexState:
    return VortexState(np.array([[0.5, 0.0], [-0.5, 0.0]]), np.array([1.0, 1.0]), 1.0)


def _translating_pair() -> VortexState:
    return VortexState(np.array([[0.0, 0.5], [0.0, -0.5]]), np.array([1.0, -1.0]), 1.0)


def _random_state(
    rng: np.random.Generator, n: int, alpha: float, separation: float, *, mixed: bool = False
) -> VortexState:
    """Intensities of size in [0.2, 0.6] at pairwise separated points of [-2, 2]^2.

    Intensities are positive unless ``mixed``, which draws each sign at random.
    """
    points: list[np.ndarray] = []
    while len(points) < n:
        candidate = rng.uniform(-2.0, 2.0, size=2)
        if all(np.hypot(*(candidate - p)) >= separation for p in points):
            points.append(candidate)
    intensities = rng.uniform(0.2, 0.6, size=n)
    if mixed:
        intensities *= rng.choice([-1.0, 1.0], size=n)
    return VortexState(np.array(points), intensities, alpha)


class TestIntegrateBasics:
    """Tests for termination handling and sampling."""

    def test_co_rotating_pair_matches_rotation(self) -> None:
        times = np.linspace(0.1, math.pi, 12)
        record = integrate(_co_rotating_pair(), 0.0, math.pi, _TIGHT, sample_times=times)
        assert record.termination.kind is TerminationKind.REACHED_FINAL_TIME
        assert record.times[-1] == math.pi
        expected = 0.5 * np.stack([np.cos(2 * record.times), np.sin(2 * record.times)], axis=1)
        np.testing.assert_allclose(record.positions[:, 0, :], expected, atol=1e-9)
        np.testing.assert_allclose(record.positions[:, 1, :], -expected, atol=1e-9)

    def test_fifth_order_convergence(self) -> None:
        def final_error(step: float) -> float:
            opts = IntegratorOptions(rel_tol=1.0, abs_tol=1.0, max_step=step)
            record = integrate(_co_rotating_pair(), 0.0, math.pi, opts)
            exact = 0.5 * np.array([math.cos(2 * math.pi), math.sin(2 * math.pi)])
            return float(np.hypot(*(record.positions[-1, 0] - exact)))

        coarse = final_error(math.pi / 20)
        fine = final_error(math.pi / 40)
        assert math.log2(coarse / fine) >= 4.0

    def test_translating_pair_conserves_invariants(self) -> None:
        record = integrate(_translating_pair(), 0.0, 1.0, _TIGHT)
        np.testing.assert_allclose(record.positions[-1], [[1.0, 0.5], [1.0, -0.5]], atol=1e-10)
        assert invariant_drift(record).conserved_max <= 1e-9
        assert identity_residual(record) <= 1e-12

    def test_sample_times_are_recorded(self) -> None:
        times = [0.123, 0.456, 0.789]
        record = integrate(_co_rotating_pair(), 0.0, 1.0, _TIGHT, sample_times=times)
        assert np.isin(times, record.times).all()
        assert record.times[0] == 0.0
        assert np.all(np.diff(record.times) > 0)

    def test_samples_outside_the_span_are_ignored(self) -> None:
        record = integrate(_co_rotating_pair(), 0.0, 1.0, _TIGHT, sample_times=[-1.0, 5.0])
        assert record.times[-1] == 1.0
        assert not np.isin([-1.0, 5.0], record.times).any()

    @pytest.mark.parametrize("t1", [0.0, -1.0])
    def test_rejects_empty_interval(self, t1: float) -> None:
        with pytest.raises(DomainError):
            integrate(_co_rotating_pair(), 0.0, t1)

    def test_step_limit(self) -> None:
        opts = IntegratorOptions(max_steps=5)
        record = integrate(_co_rotating_pair(), 0.0, 100.0, opts)
        assert record.termination.kind is TerminationKind.STEP_LIMIT
        assert not record.termination.succeeded
        assert record.steps_accepted + record.steps_rejected == 5

    def test_singular_failure_below_distance_floor(self) -> None:
        state = VortexState(np.array([[0.0, 0.0], [1e-4, 0.0]]), np.array([1.0, 1.0]), 1.0)
        opts = IntegratorOptions(distance_floor=1e-3, collapse_radius=1e-8)
        record = integrate(state, 0.0, 1.0, opts)
        assert record.termination.kind is TerminationKind.SINGULAR_FAILURE
        assert record.termination.message

    def test_initially_collapsed(self) -> None:
        state = VortexState(np.array([[0.0, 0.0], [1e-9, 0.0]]), np.array([1.0, -2.0]), 1.0)
        record = integrate(state, 2.0, 3.0, IntegratorOptions(collapse_radius=1e-8))
        assert record.collapsed
        assert record.termination.collapse_time == 2.0
        assert record.times.size == 1
        assert refine_collapse_time(record) == 2.0


class TestTimeReversal:
    """Negating every intensity runs the flow backwards."""

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    def test_round_trip_returns_the_start(self, alpha: float, rng: np.random.Generator) -> None:
        state = _random_state(rng, 4, alpha, 0.8)
        forward = integrate(state, 0.0, 0.5, _TIGHT)
        assert forward.termination.kind is TerminationKind.REACHED_FINAL_TIME
        reversed_state = VortexState(forward.positions[-1], -state.intensities, alpha)
        back = integrate(reversed_state, 0.0, 0.5, _TIGHT)
        assert back.termination.kind is TerminationKind.REACHED_FINAL_TIME
        np.testing.assert_allclose(back.positions[-1], state.positions, rtol=0.0, atol=1e-8)


class TestRefineCollapseTime:
    """Tests for locating the crossing of the collapse radius."""

    def test_interpolates_between_samples(
        self, record_factory: Callable[..., TrajectoryRecord]
    ) -> None:
        times = np.array([0.0, 0.5, 0.9, 0.96])
        positions = np.zeros((4, 2, 2))
        positions[:, 1, 0] = 1.0 - times
        record = record_factory(times, positions, np.array([1.0, 1.0]), collapse_radius=0.05)
        assert refine_collapse_time(record) == pytest.approx(0.95)

    def test_requires_collapse(self) -> None:
        record = integrate(_co_rotating_pair(), 0.0, 0.5, _TIGHT)
        with pytest.raises(NoCollapseError):
            refine_collapse_time(record)


@pytest.mark.slow
class TestSelfSimilarIntegration:
    """Integration of the exact three-vortex collapse."""

    def test_collapses_at_predicted_time(
        self, selfsimilar_run: Callable[[float], tuple[SelfSimilarSolution, TrajectoryRecord]]
    ) -> None:
        sol, record = selfsimilar_run(1.0)
        assert record.collapsed
        t_c = refine_collapse_time(record)
        assert t_c == pytest.approx(sol.T, rel=1e-3)
        assert record.min_distances[-1] == pytest.approx(sol.collapse_radius, rel=1e-6)
        drift = invariant_drift(record)
        assert drift.hamiltonian <= 1e-4
        assert drift.momentum <= 1e-6

    def test_far_pair_does_not_disturb_the_collapse(self) -> None:
        sol = build_configuration(1.0)
        base = sol.initial_state
        positions = np.vstack([base.positions, [[1e6, 0.0], [1e6 + 1.0, 0.0]]])
        intensities = np.concatenate([base.intensities, [1.0, 1.0]])
        state = VortexState(positions, intensities, 1.0)
        opts = IntegratorOptions(
            rel_tol=1e-12, abs_tol=1e-16, collapse_radius=sol.collapse_radius
        )
        record = integrate(state, 0.0, 1.5 * sol.T, opts)
        assert record.collapsed
        assert refine_collapse_time(record) == pytest.approx(sol.T, rel=1e-3)
        final = record.positions[-1]
        assert np.hypot(*(final[3] - final[4])) > 0.5


@pytest.mark.slow
class TestConservationMonteCarlo:
    """Random positive configurations conserve H, M and I."""

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    def test_random_runs(self, alpha: float, rng: np.random.Generator) -> None:
        opts = IntegratorOptions(rel_tol=1e-12, abs_tol=1e-14)
        for _ in range(100):
            state = _random_state(rng, 5, alpha, 0.8)
            record = integrate(
                state, 0.0, 1.0, opts, sample_times=np.linspace(0.0, 1.0, 101)[1:-1]
            )
            assert record.termination.kind is TerminationKind.REACHED_FINAL_TIME
            assert invariant_drift(record).conserved_max <= 1e-9
            assert identity_residual(record) <= 1e-12
            report = quasi_preservation_check(record, [0, 1])
            assert report.max_ratio <= 1.01


@pytest.mark.slow
class TestPreventCollapseMonteCarlo:
    """No counterexample appears in short random runs.

    ``T`` is the last sample and ``C_kappa`` sits below 1e-20 for four
    vortices, so only the final sample meets the time premise. The scan is
    still run end to end on every record.
    """

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    def test_random_runs(self, alpha: float, rng: np.random.Generator) -> None:
        opts = IntegratorOptions(rel_tol=1e-9, abs_tol=1e-12)
        runs = 167 if alpha == 1.0 else 166
        for k in range(runs):
            state = _random_state(rng, 4, alpha, 0.5, mixed=k % 2 == 1)
            record = integrate(
                state, 0.0, 0.05, opts, sample_times=np.linspace(0.0, 0.05, 21)[1:-1]
            )
            bound = prevent_collapse_constant(
                state.intensities, alpha, uniform_cross_constant(state.intensities), 0.0
            )
            assert bound.log_C_kappa < math.log(1e-20)
            verdict = check_prevent_collapse_implication(record, bound, 0.5)
            assert verdict.premise_samples == 1
            assert verdict.passed
            assert verdict.counterexample is None
