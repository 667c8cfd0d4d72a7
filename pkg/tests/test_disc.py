"""Tests for Euler point vortices in the unit disc."""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from vortex_collapse.analysis import extrapolate_collapse_time
from vortex_collapse.clustering import collision_clusters
from vortex_collapse.core import cluster_barycenter, velocity_field
from vortex_collapse.disc import (
    ROBIN_GRADIENT_CONSTANT,
    boundary_holder_check,
    calibrate_robin_constant,
    disc_hamiltonian,
    disc_induced_velocity,
    disc_velocity_field,
    green_disc,
    robin_disc,
    robin_gradient_disc,
    robin_self_gradient,
)
from vortex_collapse.exceptions import DomainError, InvalidStateError, PreconditionError
from vortex_collapse.integrator import IntegratorOptions, integrate, invariant_drift
from vortex_collapse.selfsimilar import build_configuration
from vortex_collapse.state import DiscState, VortexState
from vortex_collapse.trajectory import FieldKind, TerminationKind, TrajectoryRecord


@st.composite
def interior_points(draw: st.DrawFn, max_radius: float = 0.95) -> tuple[float, float]:
    r = draw(st.floats(0.0, max_radius))
    theta = draw(st.floats(0.0, 2 * math.pi))
    return (r * math.cos(theta), r * math.sin(theta))


def _gamma(x: Sequence[float], y: Sequence[float]) -> float:
    return robin_disc(np.asarray(x), np.asarray(y))


class TestGreenFunction:
    """Tests for the Green and Robin functions."""

    @given(interior_points(), interior_points())
    def test_symmetry(self, x: tuple[float, float], y: tuple[float, float]) -> None:
        assume(math.hypot(x[0] - y[0], x[1] - y[1]) > 1e-6)
        g = green_disc(x, y)
        assert g == pytest.approx(green_disc(y, x), rel=1e-12, abs=1e-14)

    @given(interior_points())
    def test_positive_inside(self, x: tuple[float, float]) -> None:
        y = (0.3, -0.2)
        if np.hypot(x[0] - y[0], x[1] - y[1]) < 1e-9:
            return
        assert green_disc(x, y) > 0

    @pytest.mark.parametrize("theta", [0.0, 1.0, 2.5, 4.0])
    def test_vanishes_near_the_boundary(self, theta: float) -> None:
        x = (1.0 - 1e-9) * np.array([math.cos(theta), math.sin(theta)])
        assert abs(green_disc(x, (0.3, 0.2))) <= 1e-8

    @pytest.mark.parametrize("y", [(0.3, 0.4), (-0.5, 0.0), (0.1, -0.05)])
    def test_center_is_pure_logarithm(self, y: tuple[float, float]) -> None:
        expected = math.log(1.0 / math.hypot(*y)) / (2 * math.pi)
        assert green_disc((0.0, 0.0), y) == pytest.approx(expected, rel=1e-13)

    def test_center_to_half_radius(self) -> None:
        assert green_disc((0.0, 0.0), (0.3, 0.4)) == pytest.approx(math.log(2.0) / (2 * math.pi))

    def test_singular_on_the_diagonal(self) -> None:
        with pytest.raises(InvalidStateError):
            green_disc((0.1, 0.2), (0.1, 0.2))

    @pytest.mark.parametrize("point", [(1.0, 0.0), (0.8, 0.8)])
    def test_outside(self, point: tuple[float, float]) -> None:
        with pytest.raises(DomainError):
            green_disc(point, (0.0, 0.0))
        with pytest.raises(DomainError):
            robin_disc(point)

    def test_green_splits_into_robin_and_logarithm(self) -> None:
        x, y = (0.2, 0.5), (-0.4, 0.1)
        log_part = math.log(math.hypot(x[0] - y[0], x[1] - y[1])) / (2 * math.pi)
        assert green_disc(x, y) == pytest.approx(_gamma(x, y) - log_part, rel=1e-12)

    def test_robin_diagonal(self) -> None:
        x = (0.3, -0.4)
        assert robin_disc(x) == pytest.approx(math.log(0.75) / (2 * math.pi))
        assert robin_disc(x) == pytest.approx(_gamma(x, x), rel=1e-12)

    def test_robin_is_harmonic(self) -> None:
        x, y, h = np.array([0.2, 0.3]), (-0.5, 0.1), 1e-4
        ex, ey = np.array([h, 0.0]), np.array([0.0, h])
        lap = (
            _gamma(x + ex, y) + _gamma(x - ex, y) + _gamma(x + ey, y) + _gamma(x - ey, y)
            - 4 * _gamma(x, y)
        ) / h**2
        assert abs(lap) <= 1e-5


class TestRobinGradient:
    """Tests for the gradient of the regular part."""

    @given(interior_points(0.9), interior_points(0.9))
    def test_matches_finite_differences(
        self, x: tuple[float, float], y: tuple[float, float]
    ) -> None:
        h = 1e-6
        px = np.asarray(x)
        numeric = np.array(
            [
                (_gamma(px + [h, 0.0], y) - _gamma(px - [h, 0.0], y)) / (2 * h),
                (_gamma(px + [0.0, h], y) - _gamma(px - [0.0, h], y)) / (2 * h),
            ]
        )
        np.testing.assert_allclose(robin_gradient_disc(x, y), numeric, atol=1e-7)

    @given(interior_points())
    def test_self_gradient_is_diagonal_gradient(self, x: tuple[float, float]) -> None:
        np.testing.assert_allclose(
            robin_self_gradient(x), robin_gradient_disc(x, x), rtol=1e-12, atol=1e-15
        )

    def test_self_gradient_is_half_the_diagonal_derivative(self) -> None:
        x, h = np.array([0.4, -0.25]), 1e-6
        numeric = np.array(
            [
                (robin_disc(x + [h, 0.0]) - robin_disc(x - [h, 0.0])) / (2 * h),
                (robin_disc(x + [0.0, h]) - robin_disc(x - [0.0, h])) / (2 * h),
            ]
        )
        np.testing.assert_allclose(robin_self_gradient(x), 0.5 * numeric, atol=1e-8)

    def test_calibrated_constant_within_bound(self, rng: np.random.Generator) -> None:
        radii = np.sqrt(rng.uniform(0.0, 0.999**2, size=200))
        angles = rng.uniform(0.0, 2 * math.pi, size=200)
        points = np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)
        constant = calibrate_robin_constant(points[:100], points[100:])
        assert 0 < constant <= ROBIN_GRADIENT_CONSTANT

    def test_calibration_rejects_outside_points(self) -> None:
        with pytest.raises(DomainError):
            calibrate_robin_constant([[1.2, 0.0]], [[0.0, 0.1]])


class TestDiscVelocity:
    """Tests for the disc velocity field."""

    def test_single_vortex_rotates(self) -> None:
        state = DiscState(np.array([[0.5, 0.0]]), np.array([1.0]))
        np.testing.assert_allclose(
            disc_velocity_field(state), [[0.0, 0.5 / (2 * math.pi * 0.75)]], atol=1e-15
        )

    @pytest.mark.parametrize("point", [(0.4, 0.0), (0.25, 0.5), (0.7, -0.3)])
    def test_mirror_pair_is_reflection_symmetric(self, point: tuple[float, float]) -> None:
        """Reflecting x -> -x and negating every intensity leaves the pair unchanged."""
        x, y = point
        state = DiscState(np.array([[x, y], [-x, y]]), np.array([1.0, -1.0]))
        v = disc_velocity_field(state)
        scale = max(1.0, float(np.abs(v).max()))
        assert v[0, 0] == pytest.approx(-v[1, 0], abs=1e-13 * scale)
        assert v[0, 1] == pytest.approx(v[1, 1], abs=1e-13 * scale)

    @pytest.mark.parametrize("theta", np.linspace(0.0, 2 * math.pi, 9)[:-1])
    def test_no_flux_through_the_boundary(self, theta: float) -> None:
        state = DiscState(
            np.array([[0.3, 0.1], [-0.2, 0.5], [0.1, -0.6]]), np.array([1.0, -0.5, 2.0])
        )
        normal = np.array([math.cos(theta), math.sin(theta)])
        v = disc_induced_velocity(state, normal)[0]
        assert abs(v @ normal) <= 1e-12 * max(1.0, float(np.hypot(*v)))

    def test_small_configurations_follow_the_plane(self) -> None:
        sol = build_configuration(1.0, scale=1e-3)
        disc_state = DiscState(sol.initial_state.positions, sol.initial_state.intensities)
        planar = velocity_field(sol.initial_state) / (2 * math.pi)
        np.testing.assert_allclose(
            disc_velocity_field(disc_state), planar, rtol=1e-4, atol=1e-6 * float(np.abs(planar).max())
        )

    def test_induced_velocity_rejects_outside_points(self) -> None:
        state = DiscState(np.array([[0.1, 0.0]]), np.array([1.0]))
        with pytest.raises(DomainError):
            disc_induced_velocity(state, [[1.5, 0.0]])

    def test_state_must_lie_inside(self) -> None:
        with pytest.raises(DomainError):
            DiscState(np.array([[1.0, 0.0]]), np.array([1.0]))

    def test_state_requires_alpha_one(self) -> None:
        with pytest.raises(DomainError):
            DiscState(np.array([[0.1, 0.0]]), np.array([1.0]), 2.0)

    def test_integration_requires_alpha_one(self) -> None:
        state = VortexState(np.array([[0.1, 0.0], [0.2, 0.0]]), np.array([1.0, 1.0]), 2.0)
        with pytest.raises(DomainError):
            integrate(state, 0.0, 1.0, field=FieldKind.DISC)


class TestDiscIntegration:
    """Integrated disc trajectories."""

    def test_single_vortex_period(self) -> None:
        rho = 0.5
        period = 4 * math.pi**2 * (1 - rho**2)
        state = DiscState(np.array([[rho, 0.0]]), np.array([1.0]))
        record = integrate(
            state,
            0.0,
            period,
            IntegratorOptions(rel_tol=1e-12, abs_tol=1e-14),
            FieldKind.DISC,
            sample_times=np.linspace(0.0, period, 50)[1:-1],
        )
        assert record.termination.kind is TerminationKind.REACHED_FINAL_TIME
        radii = np.hypot(record.positions[:, 0, 0], record.positions[:, 0, 1])
        assert np.abs(radii - rho).max() <= 1e-8
        np.testing.assert_allclose(record.positions[-1, 0], [rho, 0.0], atol=1e-8)

    def test_energy_and_impulse_are_conserved(self) -> None:
        state = DiscState(
            np.array([[0.3, 0.0], [-0.2, 0.3], [0.0, -0.4]]), np.array([1.0, -0.5, 0.8])
        )
        record = integrate(
            state, 0.0, 0.5, IntegratorOptions(rel_tol=1e-12, abs_tol=1e-14), FieldKind.DISC
        )
        assert record.field is FieldKind.DISC
        assert record.invariants[0].hamiltonian == pytest.approx(disc_hamiltonian(state))
        drift = invariant_drift(record)
        assert drift.hamiltonian <= 1e-9
        assert drift.momentum <= 1e-9


class TestBoundaryHolderCheck:
    """Tests for the Hölder check against a candidate limit point."""

    def test_accepts_square_root_collapse(
        self, mirrored_pair: Callable[..., TrajectoryRecord]
    ) -> None:
        fit = boundary_holder_check(mirrored_pair(), 1.0, 0, (0.0, 0.0))
        assert fit.exponent == pytest.approx(0.5, rel=1e-6)

    def test_rejects_other_exponents(
        self, mirrored_pair: Callable[..., TrajectoryRecord]
    ) -> None:
        with pytest.raises(PreconditionError):
            boundary_holder_check(mirrored_pair(exponent=0.8, radius=0.05), 1.0, 0, (0.0, 0.0))

    def test_rejects_distant_candidate(
        self, mirrored_pair: Callable[..., TrajectoryRecord]
    ) -> None:
        with pytest.raises(PreconditionError):
            boundary_holder_check(mirrored_pair(), 1.0, 0, (0.5, 0.5))

    def test_candidate_must_be_interior(
        self, mirrored_pair: Callable[..., TrajectoryRecord]
    ) -> None:
        with pytest.raises(DomainError):
            boundary_holder_check(mirrored_pair(), 1.0, 0, (1.0, 0.0))


@pytest.mark.slow
class TestDiscCollapse:
    """A small self-similar triangle still collapses inside the disc."""

    def test_scaled_triangle(self, tail_times: Callable[..., np.ndarray]) -> None:
        sol = build_configuration(1.0, scale=1e-2)
        state = DiscState(sol.initial_state.positions, sol.initial_state.intensities)
        predicted = 2 * math.pi * sol.collapse_time
        opts = IntegratorOptions(
            rel_tol=1e-12, abs_tol=1e-18, collapse_radius=sol.collapse_radius
        )
        record = integrate(
            state,
            0.0,
            1.5 * predicted,
            opts,
            FieldKind.DISC,
            sample_times=np.concatenate(
                [np.linspace(0.0, predicted, 200)[1:], tail_times(predicted)]
            ),
        )
        assert record.collapsed
        t_fit = extrapolate_collapse_time(record)
        assert t_fit == pytest.approx(predicted, rel=1e-2)
        parts = collision_clusters(record).parts
        assert parts == (frozenset({0, 1, 2}),)
        candidate = cluster_barycenter(record.states[-1], [0, 1, 2])
        for index in range(3):
            fit = boundary_holder_check(record, t_fit, index, candidate)
            assert fit.exponent == pytest.approx(0.5, rel=0.02)
