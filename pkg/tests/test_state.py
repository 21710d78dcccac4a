import numpy as np
import pytest

from services.state import evaluate_links, jamming_amplitudes, sinr, sum_rate
from tests.fixtures import make_config, single_cell_state, small_state


@pytest.fixture
def quiet_config():
    """Noise of 0.5 W so hand-computed SINRs are round numbers."""
    return make_config(noise_power=0.5)


class TestSinr:
    """Test the honest SINR and sum-rate on hand-built single-cell channels."""

    def test_orthogonal_users(self, quiet_config):
        """Test orthogonal users."""
        # Act
        state = single_cell_state(quiet_config, np.eye(2), np.eye(2), w=np.eye(2))

        # Assert
        assert sinr(state, 0) == pytest.approx(2.0)
        assert sinr(state, 1) == pytest.approx(2.0)
        assert sum_rate(state) == pytest.approx(2.0 * np.log2(3.0))

    def test_leakage_counts_as_interference(self, quiet_config):
        """Test leakage counts as interference."""
        w = np.array([[1.0, 1.0], [0.0, 1.0]])
        state = single_cell_state(quiet_config, np.eye(2), np.eye(2), w=w)

        # user 0 hears user 1's stream with unit power
        assert sinr(state, 0) == pytest.approx(1.0 / 1.5)
        assert sinr(state, 1) == pytest.approx(2.0)

    def test_density_scales_channel(self, quiet_config):
        """Test density scales channel."""
        # Act
        state = single_cell_state(quiet_config, np.eye(2), np.eye(2), w=np.eye(2), rho_value=2.0)

        # Assert
        assert sinr(state, 0) == pytest.approx(4.0 / 0.5)

    def test_phases_enter_channel(self, quiet_config):
        """Test phases enter channel."""
        # Act
        theta = np.array([1j, -1.0])
        state = single_cell_state(quiet_config, np.eye(2), np.eye(2), theta=theta, w=np.eye(2))
        links = evaluate_links(state)

        # Assert
        np.testing.assert_allclose(links.h_eff, np.diag(theta))
        assert sinr(state, 0) == pytest.approx(2.0)

    def test_no_beams_gives_zero_rate(self, quiet_config):
        """Test no beams gives zero rate."""
        # Act
        state = single_cell_state(quiet_config, np.eye(2), np.eye(2))

        # Assert
        assert sum_rate(state) == 0.0

    def test_jamming_lowers_sinr(self, quiet_config):
        """Test that jamming lowers the SINR."""
        # Act
        h_bu = np.eye(2)
        h_uk = np.eye(2)
        clean = single_cell_state(quiet_config, h_bu, h_uk, w=np.eye(2))
        jammed = single_cell_state(quiet_config, h_bu, h_uk, w=np.eye(2), jammer_gain=10.0)
        links = evaluate_links(jammed)

        # Assert
        assert np.all(links.floor > quiet_config.noise_power)
        assert sinr(jammed, 0) < sinr(clean, 0)
        expected = 1.0 / (np.abs(links.z_jam[0]) ** 2 * quiet_config.p_jam + quiet_config.noise_power)
        assert sinr(jammed, 0) == pytest.approx(expected)


class TestLinkQuantities:
    """Test the aggregate link snapshot on a generated scenario."""

    def test_zero_forcing_leaves_no_leakage(self, small_state):
        """Test zero forcing leaves no leakage."""
        # Act
        links = evaluate_links(small_state)

        # Assert
        assert np.all(links.interference <= 1e-12 * links.signal)
        assert links.sum_rate == pytest.approx(float(np.sum(np.log2(1.0 + links.gamma))))

    def test_jamming_amplitudes_independent_of_beams(self, small_state):
        """Test jamming amplitudes independent of beams."""
        # Act
        with_beams, _ = jamming_amplitudes(small_state)
        without, _ = jamming_amplitudes(small_state.replace(beams=None))

        # Assert
        np.testing.assert_array_equal(with_beams, without)

    def test_jamming_amplitude_matches_rows(self, small_state):
        """Test jamming amplitude matches rows."""
        # Act
        z_jam, rows = jamming_amplitudes(small_state)

        # Assert
        np.testing.assert_allclose(z_jam, rows @ small_state.jammer.v)
        assert rows.shape == (2, 4)

    def test_sum_rate_is_non_negative(self, small_state):
        """Test sum rate is non negative."""
        assert sum_rate(small_state) >= 0.0
