from pathlib import Path

import numpy as np
import pytest

from schemas.config_schemas import SystemConfig, validate_config
from services.beamform import compose_beamformers
from services.channel import ChannelSet, JammerLinkModel
from services.driver import initial_state, run_scheme
from services.ris import PhaseField
from services.scenario import DensityField, build_scenario
from services.state import JammerStrategy, SystemState

CONFIG_DIR = Path(__file__).resolve().parent.parent / 'configs'

# Small enough for finite-difference oracles to run in well under a second.
SMALL = {
    'm_antennas': 4,
    'n_elements': 4,
    'k_users': 2,
    'l_antennas': 4,
    'q_uavs': 20.0,
    'grid_dims': (4, 4),
    'solver': {'t_max': 5, 'ris_max_iterations': 30},
}


def make_config(**overrides) -> SystemConfig:
    """Validated config built on SMALL; nested sections merge key by key."""
    raw = {key: (dict(value) if isinstance(value, dict) else value) for key, value in SMALL.items()}
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(raw.get(key), dict):
            raw[key].update(value)
        else:
            raw[key] = value
    config, err = validate_config(raw)
    assert err is None, err
    return config


def single_cell_state(config: SystemConfig, h_bu, h_uk, theta=None, w=None, jammer_gain=0.0,
                      rho_value=1.0, area=1.0) -> SystemState:
    """Hand-built one-cell state with explicit channels (K from h_uk, M from h_bu)."""
    h_bu = np.asarray(h_bu, dtype=complex).reshape(1, *np.shape(h_bu))
    h_uk = np.asarray(h_uk, dtype=complex).reshape(1, *np.shape(h_uk))
    n = h_bu.shape[1]
    scenario = build_scenario(config)
    channels = ChannelSet(h_bu=h_bu, h_uk=h_uk, areas=np.array([area]), seed=config.seed)
    jlm = JammerLinkModel(cell_positions=np.array([[0.0, 0.0, 100.0]]), jammer_altitude=0.0,
                          n_elements=n, l_antennas=config.l_antennas, alpha=config.alpha,
                          beta=jammer_gain if jammer_gain > 0 else 1e-300)
    theta = PhaseField(np.ones((1, n), dtype=complex) if theta is None else np.asarray(theta).reshape(1, n))
    v = np.zeros(config.l_antennas, dtype=complex)
    v[0] = 1.0
    jammer = JammerStrategy(position=np.array([50.0, 0.0]), v=v, lambda_max=0.0)
    beams = None
    if w is not None:
        w = np.asarray(w, dtype=complex)
        beams = compose_beamformers(w, np.ones(w.shape[1]))
    return SystemState(config=config, scenario=scenario, channels=channels, jlm=jlm,
                       rho=DensityField(np.array([rho_value])), theta=theta, jammer=jammer, beams=beams)


@pytest.fixture
def small_config():
    """Small validated configuration."""
    return make_config()


@pytest.fixture
def small_state(small_config):
    """Initial state (uniform density, random phases, worst-case jammer, ZF+WF) of the small config."""
    return initial_state(small_config)


@pytest.fixture
def small_report(small_config):
    """Proposed-scheme run on the small config."""
    return run_scheme("proposed", small_config)
