"""Tests for the alpha point-vortex field, invariants and cluster quantities."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from vortex_collapse.core import (
    KernelProfile,
    barycenter_speed_bound,
    barycenter_velocity,
    cluster_barycenter,
    degeneracy_params,
    hamiltonian,
    invariants,
    kernel_value,
    min_pair_distance,
    momentum,
    pair_moment,
    scaling_functionals,
    symplectic_gradient,
    uniform_cross_constant,
    velocity_field,
    vorticity_vector,
)
from vortex_collapse.exceptions import (
    DegenerateIntensitiesError,
    DomainError,
    InvalidStateError,
    NeutralClusterError,
    SingularConfigurationError,
    SizeLimitError,
)
from vortex_collapse.state import VortexState

_coord = st.floats(-2.0, 2.0, allow_nan=False)
_intensity = st.floats(0.1, 2.0).flatmap(lambda m: st.sampled_from([m, -m]))


@st.composite
def vortex_states(
    draw: st.DrawFn, min_n: int = 2, max_n: int = 6, alpha: float | None = None
) -> VortexState:
    """Random states with pairwise distances of at least 0.05."""
    n = draw(st.integers(min_n, max_n))
    positions = np.array(draw(st.lists(st.tuples(_coord, _coord), min_size=n, max_size=n)))
    intensities = np.array(draw(st.lists(_intensity, min_size=n, max_size=n)))
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1]) + np.eye(n) * 10.0
    assume(float(dist.min()) >= 0.05)
    a = draw(st.floats(0.0, 3.0)) if alpha is None else alpha
    return VortexState(positions, intensities, a)


class TestVortexState:
    """Tests for state validation."""

    def test_rejects_zero_intensity(self) -> None:
        with pytest.raises(InvalidStateError):
            VortexState(np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([1.0, 0.0]), 1.0)

    def test_rejects_coincident_positions(self) -> None:
        with pytest.raises(InvalidStateError):
            VortexState(np.array([[0.5, 0.5], [0.5, 0.5]]), np.array([1.0, 1.0]), 1.0)

    def test_rejects_shape_mismatch(self) -> None:
        with pytest.raises(InvalidStateError):
            VortexState(np.zeros((2, 3)), np.array([1.0, 1.0]), 1.0)

    def test_rejects_negative_alpha(self) -> None:
        with pytest.raises(DomainError):
            VortexState(np.array([[0.0, 0.0]]), np.array([1.0]), -0.5)

    def test_arrays_are_read_only(self) -> None:
        state = VortexState(np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([1.0, 2.0]), 1.0)
        with pytest.raises(ValueError, match="read-only"):
            state.positions[0, 0] = 3.0

    def test_scaled_about_center(self) -> None:
        state = VortexState(np.array([[1.0, 1.0], [3.0, 1.0]]), np.array([1.0, 2.0]), 1.0)
        scaled = state.scaled(0.5, center=(1.0, 1.0))
        np.testing.assert_allclose(scaled.positions, [[1.0, 1.0], [2.0, 1.0]])


class TestKernelProfile:
    """Tests for K_alpha."""

    def test_logarithm_at_alpha_one(self) -> None:
        assert kernel_value(1.0, math.e) == pytest.approx(1.0)

    def test_power_law_branch(self) -> None:
        assert kernel_value(2.0, 2.0) == pytest.approx(0.5)
        assert kernel_value(0.0, 3.0) == pytest.approx(2.0)

    @given(st.floats(0.0, 5.0))
    def test_vanishes_at_one(self, alpha: float) -> None:
        assert kernel_value(alpha, 1.0) == 0.0

    @pytest.mark.parametrize("r", [0.1, 2.0, 50.0])
    def test_continuous_across_alpha_one(self, r: float) -> None:
        assert kernel_value(1.0 + 1e-9, r) == pytest.approx(math.log(r), rel=1e-6)

    @pytest.mark.parametrize("r", [0.0, -1.0, float("inf")])
    def test_rejects_bad_distance(self, r: float) -> None:
        with pytest.raises(DomainError):
            kernel_value(1.0, r)

    def test_derivative(self) -> None:
        profile = KernelProfile(1.5)
        assert profile.derivative(4.0) == pytest.approx(0.125)
        h = 1e-6
        slope = (profile.value(2.0 + h) - profile.value(2.0 - h)) / (2 * h)
        assert slope == pytest.approx(profile.derivative(2.0), rel=1e-8)


class TestVelocityField:
    """Tests for the induced velocities."""

    def test_co_rotating_pair(self) -> None:
        state = VortexState(np.array([[0.5, 0.0], [-0.5, 0.0]]), np.array([1.0, 1.0]), 1.0)
        np.testing.assert_allclose(velocity_field(state), [[0.0, 1.0], [0.0, -1.0]])

    def test_translating_pair(self) -> None:
        state = VortexState(np.array([[0.0, 0.5], [0.0, -0.5]]), np.array([1.0, -1.0]), 1.0)
        np.testing.assert_allclose(velocity_field(state), [[1.0, 0.0], [1.0, 0.0]])

    def test_single_vortex_is_at_rest(self) -> None:
        state = VortexState(np.array([[0.3, -0.2]]), np.array([2.0]), 1.5)
        np.testing.assert_array_equal(velocity_field(state), [[0.0, 0.0]])

    def test_distance_below_floor(self) -> None:
        state = VortexState(np.array([[0.0, 0.0], [1e-35, 0.0]]), np.array([1.0, 1.0]), 1.0)
        with pytest.raises(SingularConfigurationError):
            velocity_field(state)

    @given(vortex_states())
    def test_vorticity_weighted_velocities_cancel(self, state: VortexState) -> None:
        weighted = state.intensities @ velocity_field(state)
        dist = np.hypot(*(state.positions[:, None, :] - state.positions[None, :, :]).T)
        np.fill_diagonal(dist, np.inf)
        abs_a = np.abs(state.intensities)
        scale = float(abs_a @ dist ** (-state.alpha) @ abs_a)
        assert np.abs(weighted).max() <= 1e-12 * max(scale, 1.0)

    @given(vortex_states(), st.floats(0.0, 2 * math.pi))
    def test_rotation_equivariance(self, state: VortexState, angle: float) -> None:
        rot = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
        rotated = state.with_positions(state.positions @ rot.T)
        v = velocity_field(state)
        np.testing.assert_allclose(
            velocity_field(rotated), v @ rot.T, atol=1e-9 * max(1.0, float(np.abs(v).max()))
        )

    @given(vortex_states(), st.floats(0.1, 10.0))
    def test_homogeneous_of_degree_minus_alpha(self, state: VortexState, mu: float) -> None:
        v = velocity_field(state)
        scaled = velocity_field(state.scaled(mu))
        np.testing.assert_allclose(
            scaled,
            mu ** (-state.alpha) * v,
            rtol=1e-9,
            atol=1e-10 * max(1.0, float(np.abs(scaled).max())),
        )

    @settings(max_examples=30)
    @given(vortex_states(max_n=4))
    def test_hamiltonian_structure(self, state: VortexState) -> None:
        grad = symplectic_gradient(state)
        h = 1e-6
        numeric = np.zeros_like(grad)
        for i, k in itertools.product(range(state.n), range(2)):
            step = np.zeros_like(grad)
            step[i, k] = h
            up = hamiltonian(state.with_positions(state.positions + step))
            down = hamiltonian(state.with_positions(state.positions - step))
            numeric[i, k] = (up - down) / (2 * h)
        scale = max(1.0, float(np.abs(grad).max()))
        np.testing.assert_allclose(grad, numeric, atol=1e-5 * scale)
        expected = np.stack([-grad[:, 1], grad[:, 0]], axis=1)
        np.testing.assert_allclose(
            state.intensities[:, None] * velocity_field(state), expected, atol=1e-12 * scale
        )


class TestInvariants:
    """Tests for H, M, I and L."""

    def test_pair_values(self) -> None:
        state = VortexState(np.array([[1.0, 0.0], [-1.0, 0.0]]), np.array([2.0, 3.0]), 1.0)
        assert hamiltonian(state) == pytest.approx(6.0 * math.log(2.0))
        np.testing.assert_allclose(vorticity_vector(state), [-1.0, 0.0])
        assert momentum(state) == pytest.approx(5.0)
        assert pair_moment(state) == pytest.approx(2 * 6.0 * 4.0)

    def test_single_vortex_min_distance_is_infinite(self) -> None:
        assert min_pair_distance(np.array([[0.0, 0.0]])) == math.inf

    @given(vortex_states(min_n=1))
    def test_pair_moment_identity(self, state: VortexState) -> None:
        sample = invariants(state)
        m2 = sample.vorticity_vector[0] ** 2 + sample.vorticity_vector[1] ** 2
        total = float(state.intensities.sum())
        expected = 2 * total * sample.momentum - 2 * m2
        scale = 4 * float(np.abs(state.intensities).sum()) ** 2 * 16.0
        assert sample.pair_moment == pytest.approx(expected, abs=1e-12 * scale)

    def test_scaling_functionals_at_alpha_one(self) -> None:
        a = np.array([1.0, -0.5, 2.0])
        state = VortexState(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 3.0]]), a, 1.0)
        _, lam_prime = scaling_functionals(state)
        assert lam_prime == pytest.approx(a.sum() ** 2 - (a**2).sum())

    def test_scaling_functional_is_scale_derivative(self) -> None:
        state = VortexState(
            np.array([[0.0, 0.0], [1.0, 0.2], [0.3, 1.5]]), np.array([1.0, -0.7, 2.0]), 2.5
        )
        _, lam_prime = scaling_functionals(state)
        h = 1e-6
        derivative = (
            hamiltonian(state.scaled(math.exp(h))) - hamiltonian(state.scaled(math.exp(-h)))
        ) / (2 * h)
        assert derivative == pytest.approx(0.5 * lam_prime, rel=1e-7)


class TestDegeneracyParams:
    """Tests for the subset-sum degeneracy parameters."""

    def test_equal_intensities(self) -> None:
        params = degeneracy_params([1.0, 1.0, 1.0])
        assert params.A0 == pytest.approx(1.0)
        assert params.A == pytest.approx(1.0)
        assert params.a_abs_sum == pytest.approx(3.0)

    def test_neutral_strict_subset(self) -> None:
        params = degeneracy_params([1.0, -1.0, 2.0])
        assert params.A0 == 0.0
        assert not params.sub_clusters_non_neutral

    def test_neutral_full_set_only(self) -> None:
        params = degeneracy_params([1.0, -1.0])
        assert params.A0 == pytest.approx(1.0)
        assert params.A == 0.0
        assert params.sub_clusters_non_neutral
        assert not params.non_neutral

    def test_single_vortex(self) -> None:
        params = degeneracy_params([-2.0])
        assert params.A0 == pytest.approx(2.0)
        assert params.A == pytest.approx(2.0)

    def test_size_limit(self) -> None:
        with pytest.raises(SizeLimitError):
            degeneracy_params(np.ones(26))

    @settings(max_examples=60)
    @given(st.lists(st.integers(-9, 9).filter(bool), min_size=2, max_size=8))
    def test_matches_brute_force(self, values: list[int]) -> None:
        n = len(values)
        sums = [
            abs(sum(values[i] for i in subset))
            for k in range(1, n)
            for subset in itertools.combinations(range(n), k)
        ]
        params = degeneracy_params([float(v) for v in values])
        assert params.A0 == pytest.approx(min(sums))
        assert params.A == pytest.approx(min(min(sums), abs(sum(values))))


class TestClusterQuantities:
    """Tests for barycenters and their speed bound."""

    def test_barycenter(self) -> None:
        state = VortexState(
            np.array([[0.0, 0.0], [2.0, 0.0], [5.0, 5.0]]), np.array([1.0, 3.0, 1.0]), 1.0
        )
        np.testing.assert_allclose(cluster_barycenter(state, {0, 1}), [1.5, 0.0])

    def test_neutral_cluster(self) -> None:
        state = VortexState(np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([1.0, -1.0]), 1.0)
        with pytest.raises(NeutralClusterError):
            cluster_barycenter(state, [0, 1])

    def test_empty_subset(self) -> None:
        state = VortexState(np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([1.0, 1.0]), 1.0)
        with pytest.raises(DomainError):
            cluster_barycenter(state, [])

    def test_full_set_bound_vanishes(self) -> None:
        state = VortexState(np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([1.0, 2.0]), 1.0)
        assert barycenter_speed_bound(state, [0, 1]) == 0.0
        np.testing.assert_allclose(barycenter_velocity(state, [0, 1]), [0.0, 0.0], atol=1e-15)

    @given(vortex_states(min_n=3))
    def test_speed_within_bound(self, state: VortexState) -> None:
        subset = [0, 1]
        total = float(state.intensities[subset].sum())
        assume(abs(total) > 1e-3)
        speed = float(np.hypot(*barycenter_velocity(state, subset)))
        assert speed <= barycenter_speed_bound(state, subset) * (1 + 1e-12)

    def test_uniform_cross_constant(self) -> None:
        assert uniform_cross_constant([1.0, 1.0, 1.0]) == pytest.approx(3.0)
        with pytest.raises(DegenerateIntensitiesError):
            uniform_cross_constant([1.0, -1.0, 2.0])
