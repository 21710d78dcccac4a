import numpy as np
import pytest

from services.driver import (Scheme, alternating_optimize, beamform_step, complexity_timing,
                             evaluate_worst_case, gain_field_timing, initial_state, run_scheme)
from services.ris import random_phases
from services.scenario import build_grid, uniform_density
from services.state import evaluate_links, sum_rate
from tests.fixtures import make_config, small_config, small_state


class TestInitialState:
    """Test the starting point of every scheme."""

    def test_uniform_density_and_random_phases(self, small_config):
        """Test the uniform density, seeded phases and full-power beams."""
        # Arrange
        grid = build_grid(small_config)

        # Act
        state = initial_state(small_config)

        # Assert
        np.testing.assert_allclose(state.rho.rho, uniform_density(grid, 20.0, 0.05).rho)
        np.testing.assert_array_equal(state.theta.theta, random_phases(0, 16, 4).theta)
        assert state.beams is not None
        assert state.beams.total_power == pytest.approx(small_config.p_bs)

    def test_design_radius_zero_keeps_estimate(self, small_config):
        """Test that a zero design radius places the jammer at the estimate."""
        # Act
        state = initial_state(small_config, design_epsilon=0.0)

        # Assert
        np.testing.assert_array_equal(state.jammer.position, [100.0, 40.0])

    def test_beamform_step_never_lowers_rate(self, small_state):
        """Test that re-running ZF and water-filling never loses rate."""
        # Act
        updated = beamform_step(small_state)

        # Assert
        assert sum_rate(updated) >= sum_rate(small_state)


class TestAlternatingOptimize:
    """Test the outer block-coordinate ascent."""

    def test_trace_is_monotone(self, small_config):
        """Test that the outer trace never drops and ends at the design rate."""
        # Act
        report = alternating_optimize(small_config)

        # Assert
        assert np.all(np.diff(report.trace) >= -1e-12)
        assert len(report.trace) == report.iterations + 1
        assert report.iterations <= small_config.solver.t_max
        assert report.design_sum_rate == pytest.approx(report.trace[-1])

    def test_final_state_is_feasible(self, small_config):
        """Test density budget, unit modulus, power budget and rate bookkeeping."""
        # Act
        report = alternating_optimize(small_config)

        # Assert
        state = report.state
        assert state.rho.violations(state.grid, small_config.q_uavs, small_config.rho_max) == []
        assert state.theta.max_modulus_error() < 1e-9
        assert state.beams.total_power <= small_config.p_bs * (1.0 + 1e-9)
        np.testing.assert_allclose(report.rates, np.log2(1.0 + report.gamma))

    def test_density_moves_off_uniform(self, small_config):
        """Test that the density block reshapes the swarm in the first round."""
        # Act
        report = alternating_optimize(small_config)

        # Assert
        assert report.density_steps[0] > 0.0
        assert np.ptp(report.state.rho.rho) > 0.0

    def test_same_seed_same_run(self, small_config):
        """Test that a rerun with the same seed is identical."""
        # Act
        first = alternating_optimize(small_config)
        second = alternating_optimize(small_config)

        # Assert
        np.testing.assert_array_equal(first.trace, second.trace)
        np.testing.assert_array_equal(first.state.rho.rho, second.state.rho.rho)

    def test_zero_iterations(self):
        """Test that t_max=0 reports the initial state only."""
        # Act
        report = alternating_optimize(make_config(solver={'t_max': 0}))

        # Assert
        assert report.iterations == 0
        assert len(report.trace) == 1
        assert not report.converged

    def test_design_evaluation_mode(self):
        """Test that design evaluation reuses the design jammer."""
        # Act
        report = alternating_optimize(make_config(solver={'evaluation': 'design'}))

        # Assert
        assert report.worst_case_sum_rate == report.design_sum_rate
        np.testing.assert_array_equal(report.worst_case_jammer.position, report.state.jammer.position)

    def test_stage_timings_recorded(self, small_config):
        """Test that every stage reports a non-negative time."""
        # Act
        report = alternating_optimize(small_config)

        # Assert
        assert set(report.stage_seconds) == {"setup", "beamform", "phases", "density", "evaluation"}
        assert all(seconds >= 0.0 for seconds in report.stage_seconds.values())
        assert len(report.density_steps) == report.iterations

    def test_worst_case_jammer_in_disk(self, small_config):
        """Test that the evaluation jammer stays inside the uncertainty disk."""
        # Act
        report = alternating_optimize(small_config)

        # Assert
        offset = report.worst_case_jammer.position - np.array([100.0, 40.0])
        assert np.linalg.norm(offset) <= small_config.epsilon + 1e-9
        assert report.sum_rate == report.worst_case_sum_rate


class TestSchemes:
    """Test the benchmark schemes."""

    def test_uniform_random_phase_scheme_freezes_density_and_phases(self, small_config):
        """Test that s3 keeps the uniform density and the seeded phases."""
        # Act
        report = run_scheme("s3", small_config)

        # Assert
        np.testing.assert_allclose(report.state.rho.rho, initial_state(small_config).rho.rho)
        np.testing.assert_array_equal(report.state.theta.theta, random_phases(0, 16, 4).theta)
        assert report.scheme == "s3"

    def test_uniform_optimized_phase_scheme_freezes_density(self, small_config):
        """Test that s2 never touches the density."""
        # Act
        report = run_scheme(Scheme.S2_UNIFORM_OPT_PHASE, small_config)

        # Assert
        np.testing.assert_allclose(report.state.rho.rho, initial_state(small_config).rho.rho)
        assert report.density_steps == []

    def test_non_robust_scheme_designs_at_estimate(self, small_config):
        """Test that s1 designs against a jammer at the estimate."""
        # Act
        report = run_scheme("s1", small_config)

        # Assert
        np.testing.assert_array_equal(report.state.jammer.position, [100.0, 40.0])

    def test_zero_radius_makes_proposed_non_robust(self):
        """Test that without uncertainty the proposed and non-robust schemes coincide."""
        # Arrange
        config = make_config(epsilon=0.0, solver={'t_max': 2})

        # Act
        proposed = run_scheme("proposed", config)
        s1 = run_scheme("s1", config)

        # Assert
        assert proposed.sum_rate == pytest.approx(s1.sum_rate, abs=1e-6)
        np.testing.assert_array_equal(proposed.state.jammer.position, s1.state.jammer.position)

    def test_unknown_scheme(self, small_config):
        """Test that an unknown scheme name is rejected."""
        with pytest.raises(ValueError):
            run_scheme("s9", small_config)

    def test_worst_case_evaluation_uses_full_radius(self, small_config):
        """Test that evaluation re-optimizes the jammer over the full disk."""
        # Arrange
        report = run_scheme("s1", small_config)

        # Act
        rate, jammer = evaluate_worst_case(report.state)

        # Assert
        assert rate == pytest.approx(report.worst_case_sum_rate)
        np.testing.assert_allclose(jammer.position, report.worst_case_jammer.position)


class TestTimings:
    """Test the complexity timings."""

    def test_complexity_timing_rows(self, small_config):
        """Test one row per swarm size on a fixed grid."""
        # Act
        rows = complexity_timing(small_config, [5.0, 10.0], repeats=2)

        # Assert
        assert [row["q"] for row in rows] == [5.0, 10.0]
        assert all(row["cells"] == 16 for row in rows)
        assert all(row["seconds"] >= 0.0 for row in rows)

    def test_gain_field_timing_rows(self, small_config):
        """Test one row per grid size."""
        # Act
        rows = gain_field_timing(small_config, [(2, 2), (4, 2)], repeats=1)

        # Assert
        assert [row["cells"] for row in rows] == [4, 8]

    def test_links_after_run(self, small_config):
        """Test that the reported SINRs match a fresh link evaluation."""
        # Act
        report = run_scheme("proposed", small_config)

        # Assert
        np.testing.assert_allclose(evaluate_links(report.state).gamma, report.gamma)
