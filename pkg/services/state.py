"""System state and the honest SINR / sum-rate metric.

Every optimizer block reads a ``SystemState`` and returns a new one; states
are immutable so candidate updates can be evaluated and discarded freely.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Tuple

import numpy as np

from schemas.config_schemas import SystemConfig
from services.channel import ChannelSet, JammerLinkModel, effective_bs_channels, jam_rows
from services.scenario import DensityField, Grid, Scenario

if TYPE_CHECKING:
    from services.beamform import BeamformSet
    from services.ris import PhaseField


@dataclass(frozen=True)
class JammerStrategy:
    """Jammer position (horizontal, meters), unit beamformer and its lambda_max.

    ``flat`` marks a strategy returned because the lambda_max landscape had
    no usable gradient at the estimate.
    """
    position: np.ndarray
    v: np.ndarray
    lambda_max: float
    flat: bool = False


@dataclass(frozen=True)
class SystemState:
    config: SystemConfig
    scenario: Scenario
    channels: ChannelSet
    jlm: JammerLinkModel
    rho: DensityField
    theta: "PhaseField"
    jammer: JammerStrategy
    beams: Optional["BeamformSet"] = None

    @property
    def grid(self) -> Grid:
        return self.scenario.grid

    def replace(self, **changes) -> "SystemState":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class LinkQuantities:
    """Per-user aggregate link values for one state.

    Attributes:
        h_eff: (K, M) aggregate BS->user rows.
        jam: (K, L) aggregate jammer->user rows.
        z: (K, K) received amplitudes, z[k, i] = h_eff[k] @ w_i.
        z_jam: (K,) jamming amplitudes h_eff,J,k(j, v).
        floor: (K,) jamming-plus-noise power |z_jam|^2 P_J + sigma^2.
        signal: (K,) |z[k, k]|^2.
        interference: (K,) inter-user leakage sum_{i != k} |z[k, i]|^2.
    """
    h_eff: np.ndarray
    jam: np.ndarray
    z: np.ndarray
    z_jam: np.ndarray
    floor: np.ndarray
    signal: np.ndarray
    interference: np.ndarray

    @property
    def denominator(self) -> np.ndarray:
        return self.interference + self.floor

    @property
    def gamma(self) -> np.ndarray:
        return self.signal / self.denominator

    @property
    def rates(self) -> np.ndarray:
        return np.log2(1.0 + self.gamma)

    @property
    def sum_rate(self) -> float:
        return float(np.sum(self.rates))


def jamming_amplitudes(state: SystemState) -> Tuple[np.ndarray, np.ndarray]:
    """(K,) jamming amplitudes and (K, L) jam rows; independent of the BS beamformers."""
    rows = jam_rows(state.theta, state.rho, state.channels, state.jlm, state.jammer.position)
    return rows @ state.jammer.v, rows


def evaluate_links(state: SystemState) -> LinkQuantities:
    """Aggregate channels and received powers; leakage is measured, never assumed zero."""
    h_eff = effective_bs_channels(state.theta, state.rho, state.channels)
    z_jam, rows = jamming_amplitudes(state)
    k_users = h_eff.shape[0]
    if state.beams is None:
        z = np.zeros((k_users, k_users), dtype=complex)
    else:
        z = h_eff @ state.beams.w
    power = np.abs(z) ** 2
    signal = np.diag(power).copy()
    interference = power.sum(axis=1) - signal
    floor = np.abs(z_jam) ** 2 * state.config.p_jam + state.config.noise_power
    return LinkQuantities(h_eff=h_eff, jam=rows, z=z, z_jam=z_jam, floor=floor,
                          signal=signal, interference=np.maximum(interference, 0.0))


def sinr(state: SystemState, k: int) -> float:
    """SINR of user k: signal over leakage plus jamming plus noise."""
    return float(evaluate_links(state).gamma[k])


def sum_rate(state: SystemState) -> float:
    """Sum over users of log2(1 + SINR), in bits/s/Hz."""
    return evaluate_links(state).sum_rate
