import numpy as np
import pytest

from services.errors import StepRejectedError
from services.ris import (PhaseField, build_workspace, euclidean_gradient, optimize_phases,
                          random_phases, retract, riemannian_norm, tangent_project)
from services.scenario import DensityField
from services.state import evaluate_links, sum_rate
from tests.fixtures import make_config, single_cell_state, small_config, small_state

PHASE_STEP = 1e-5


def _rotated(state, cell, element, angle):
    theta = state.theta.theta.copy()
    theta[cell, element] *= np.exp(1j * angle)
    return state.replace(theta=PhaseField(theta))


def _check_gradient(state, coordinates):
    """Compare the analytic gradient with central differences of the sum-rate."""
    gradient = euclidean_gradient(state)
    theta = state.theta.theta
    areas = state.channels.areas
    analytic, numeric = [], []
    for c, n in coordinates:
        analytic.append(2.0 * np.real(np.conj(gradient[c, n]) * 1j * theta[c, n] * areas[c]))
        numeric.append((sum_rate(_rotated(state, c, n, PHASE_STEP))
                        - sum_rate(_rotated(state, c, n, -PHASE_STEP))) / (2.0 * PHASE_STEP))
    analytic, numeric = np.array(analytic), np.array(numeric)
    scale = np.max(np.abs(numeric))
    assert scale > 0.0
    np.testing.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-5 * scale)


def _single_user_state():
    """One cell, one user, four elements, a fixed beam and no jammer."""
    rng = np.random.default_rng(5)
    h_bu = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    h_uk = rng.standard_normal((1, 4)) + 1j * rng.standard_normal((1, 4))
    w = np.full((4, 1), 0.5, dtype=complex)
    theta = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
    config = make_config(k_users=1, noise_power=1.0)
    return single_cell_state(config, h_bu, h_uk, theta=theta, w=w, jammer_gain=0.0)


class TestManifoldOperations:
    """Test tangent projection, retraction and the weighted norm."""

    def test_tangent_project_removes_radial_part(self):
        """Test that the component along theta is removed."""
        np.testing.assert_allclose(tangent_project(np.array([1.0 + 0j]), np.array([1.0 + 1j])), [1j])

    def test_tangent_project_keeps_tangent_part(self):
        """Test that a purely tangent direction is left as it is."""
        np.testing.assert_allclose(tangent_project(np.array([1j]), np.array([1.0 + 0j])), [1.0])

    def test_projection_is_orthogonal_to_theta(self):
        """Test that projected fields are orthogonal to theta at every element."""
        # Arrange
        rng = np.random.default_rng(0)
        theta = np.exp(1j * rng.uniform(0, 2 * np.pi, (3, 4)))
        g = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))

        # Act
        xi = tangent_project(theta, g)

        # Assert
        np.testing.assert_allclose(np.real(xi * np.conj(theta)), 0.0, atol=1e-12)

    def test_retract_normalizes(self):
        """Test that retraction lands back on the unit circle."""
        # Act
        field = retract(np.array([1.0 + 0j]), np.array([1j]), 1.0)

        # Assert
        np.testing.assert_allclose(field.theta, [(1.0 + 1j) / np.sqrt(2.0)])
        assert field.max_modulus_error() < 1e-12

    def test_retract_rejects_collapse(self):
        """Test that a step through the origin is rejected."""
        with pytest.raises(StepRejectedError):
            retract(np.array([1.0 + 0j]), np.array([-1.0 + 0j]), 1.0)

    def test_riemannian_norm_weights_by_area(self):
        """Test that each cell contributes in proportion to its area."""
        # Act
        xi = np.ones((2, 3), dtype=complex)

        # Assert
        assert riemannian_norm(xi, np.array([1.0, 4.0])) == pytest.approx(np.sqrt(15.0))

    def test_random_phases(self):
        """Test that random phases are unit modulus and reproducible from the seed."""
        # Act
        first = random_phases(3, 16, 4)
        second = random_phases(3, 16, 4)

        # Assert
        assert first.theta.shape == (16, 4)
        assert first.max_modulus_error() < 1e-12
        np.testing.assert_array_equal(first.theta, second.theta)


class TestEuclideanGradient:
    """Test the functional derivative against finite differences."""

    def test_gradient_on_generated_scenario(self, small_state):
        """Test the gradient on the generated small scenario."""
        _check_gradient(small_state, [(0, 0), (3, 1), (5, 2), (10, 3), (15, 0)])

    def test_gradient_with_leakage_and_jamming(self):
        """Test the gradient when beams leak between users and the jammer is loud."""
        # Arrange
        config = make_config(noise_power=0.1)
        rng = np.random.default_rng(11)
        h_bu = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        h_uk = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
        w = 0.5 * (rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2)))
        theta = np.exp(1j * rng.uniform(0, 2 * np.pi, 3))
        state = single_cell_state(config, h_bu, h_uk, theta=theta, w=w, jammer_gain=10.0)

        # Act / Assert
        assert np.all(evaluate_links(state).interference > 0.0)
        _check_gradient(state, [(0, 0), (0, 1), (0, 2)])

    def test_gradient_vanishes_without_density(self, small_state):
        """Test that an empty swarm has no phase gradient."""
        # Arrange
        empty = small_state.replace(rho=DensityField(np.zeros(small_state.grid.n_cells)))

        # Act
        gradient = euclidean_gradient(empty)

        # Assert
        np.testing.assert_array_equal(gradient, 0.0)

    def test_workspace_shapes(self, small_state):
        """Test the array shapes cached by the gradient workspace."""
        # Act
        workspace = build_workspace(small_state)

        # Assert
        assert euclidean_gradient(small_state, workspace).shape == (16, 4)
        assert workspace.hw.shape == (16, 4, 2)
        assert workspace.responses.shape == (16, 2, 2)
        assert workspace.c_b.shape == (16, 2, 4)
        assert workspace.c_j.shape == (16, 2, 4)

    def test_workspace_responses_sum_to_link_amplitudes(self, small_state):
        """Test that density-weighted cell responses add up to the link amplitudes."""
        # Arrange
        workspace = build_workspace(small_state)
        weights = small_state.rho.rho * small_state.channels.areas

        # Act
        z = np.einsum('c,cki->ki', weights, workspace.responses)
        z_jam = np.einsum('c,ck->k', weights, workspace.jam_responses)

        # Assert
        np.testing.assert_allclose(z, workspace.links.z, rtol=1e-10,
                                   atol=1e-12 * np.abs(workspace.links.z).max())
        np.testing.assert_allclose(z_jam, workspace.links.z_jam, rtol=1e-10,
                                   atol=1e-12 * np.abs(workspace.links.z_jam).max())


class TestOptimizePhases:
    """Test the backtracking ascent on the phase field."""

    def test_trace_strictly_increases(self, small_state):
        """Test that every accepted step raises the sum-rate."""
        # Act
        theta, trace = optimize_phases(small_state)

        # Assert
        rates = np.array(trace.sum_rates)
        assert np.all(np.diff(rates) > 0.0)
        assert trace.stop_reason in ("gradient", "stationary", "improvement", "max_iterations")
        assert trace.iterations <= small_state.config.solver.ris_max_iterations

    def test_result_is_unit_modulus_and_better(self, small_state):
        """Test that the returned phases are feasible and no worse than the start."""
        # Act
        theta, trace = optimize_phases(small_state)

        # Assert
        assert theta.max_modulus_error() < 1e-9
        assert sum_rate(small_state.replace(theta=theta)) == pytest.approx(trace.sum_rates[-1])
        assert trace.sum_rates[-1] >= sum_rate(small_state)

    def test_solver_options_override(self, small_state):
        """Test that explicit options take precedence over the config."""
        # Arrange
        opts = small_state.config.solver.model_copy(update={'ris_max_iterations': 1})

        # Act
        _, trace = optimize_phases(small_state, opts)

        # Assert
        assert trace.iterations == 1
        assert len(trace.sum_rates) <= 2

    def test_relative_gradient_stop(self, small_state):
        """Test that a loose relative tolerance stops once the gradient has shrunk enough."""
        # Arrange
        opts = small_state.config.solver.model_copy(
            update={'ris_tol': 0.5, 'ris_max_iterations': 500, 'ris_improvement_tol': 0.0})

        # Act
        _, trace = optimize_phases(small_state, opts)

        # Assert
        assert trace.stop_reason == "gradient"
        assert trace.gradient_norms[-1] <= 0.5 * trace.gradient_norms[0]
        assert all(norm > 0.5 * trace.gradient_norms[0] for norm in trace.gradient_norms[:-1])

    def test_stationary_start_returned_unchanged(self, small_state):
        """Test that a start with zero gradient stops on the first iteration."""
        # Arrange
        empty = small_state.replace(rho=DensityField(np.zeros(small_state.grid.n_cells)))

        # Act
        theta, trace = optimize_phases(empty)

        # Assert
        assert trace.iterations == 1
        assert trace.stop_reason == "gradient"
        assert trace.sum_rates == [pytest.approx(0.0)]
        np.testing.assert_array_equal(theta.theta, empty.theta.theta)

    def test_single_user_phases_co_phase(self):
        """Test that one user's cascaded paths end up adding in phase."""
        # Arrange
        state = _single_user_state()
        opts = state.config.solver.model_copy(
            update={'ris_tol': 1e-8, 'ris_improvement_tol': 0.0, 'ris_max_iterations': 500})
        hw = state.channels.h_bu[0] @ state.beams.w[:, 0]
        paths = np.conj(state.channels.h_uk[0, 0]) * hw

        # Act
        theta, trace = optimize_phases(state, opts)

        # Assert
        terms = paths * theta.theta[0]
        misalignment = np.angle(terms * np.conj(terms.sum()))
        assert np.max(np.abs(misalignment)) < 1e-3
        assert trace.sum_rates[-1] > trace.sum_rates[0]
        bound = np.log2(1.0 + np.sum(np.abs(paths)) ** 2 / state.config.noise_power)
        assert trace.sum_rates[-1] == pytest.approx(bound, rel=1e-6)
