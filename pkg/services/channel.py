"""Channel synthesis and mean-field aggregate channels.

BS->ARIS and ARIS->user links are Rician (LoS outer product plus i.i.d.
CN(0, 1) scattering, scaled by the power-law path loss). Jammer->ARIS links
are pure line-of-sight and evaluated on demand for any jammer position, so
the jamming landscape is a smooth function of that position.

Arrays follow one layout throughout: ``h_bu`` is (C, N, M), ``h_uk`` is
(C, K, N), phase fields are (C, N); C is the number of grid cells. Aggregate
sums run over cells in index order.
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from logging_config import get_logger
from services.errors import ContractViolationError, DomainError, GridMismatchError
from services.scenario import DensityField, Scenario, substream

logger = get_logger(__name__)


def array_response(angle, count: int, spacing: float = 0.5) -> np.ndarray:
    """ULA steering vector; element m is exp(i 2 pi spacing m sin(angle)).

    ``angle`` may be an array, in which case the element axis is appended last.
    """
    angle = np.asarray(angle, dtype=float)
    m = np.arange(count)
    return np.exp(1j * 2.0 * np.pi * spacing * np.multiply.outer(np.sin(angle), m))


def path_loss(distance, alpha: float, beta: float):
    """Linear power gain beta * d**(-alpha).

    Raises:
        DomainError: Any distance is not strictly positive.
    """
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0.0):
        raise DomainError(f"path loss needs distance > 0, got min {float(np.min(d)):g}")
    gain = beta * d ** (-alpha)
    return float(gain) if gain.ndim == 0 else gain


def synth_rician(los: np.ndarray, kappa: float, d, alpha: float, beta: float,
                 rng: np.random.Generator) -> np.ndarray:
    """Rician channel: sqrt(beta d^-alpha) (sqrt(k/(k+1)) LoS + sqrt(1/(k+1)) NLoS).

    Args:
        los: (..., rows, cols) unit-magnitude LoS matrices.
        kappa: Linear K-factor (0 gives pure scattering).
        d: Link distances, broadcastable to ``los.shape[:-2]``.
        alpha: Path-loss exponent.
        beta: Reference gain at 1 m.
        rng: Generator supplying the scattering draw.

    Returns:
        np.ndarray: Complex array shaped like ``los``.
    """
    los = np.asarray(los, dtype=complex)
    scale = np.sqrt(path_loss(d, alpha, beta))
    scale = np.asarray(scale, dtype=float)[..., None, None]
    nlos = (rng.standard_normal(los.shape) + 1j * rng.standard_normal(los.shape)) / np.sqrt(2.0)
    return scale * (np.sqrt(kappa / (kappa + 1.0)) * los + np.sqrt(1.0 / (kappa + 1.0)) * nlos)


def elevation(source: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Angle from ``source`` to ``target`` in the vertical plane holding both points."""
    delta = np.asarray(target, dtype=float) - np.asarray(source, dtype=float)
    horizontal = np.hypot(delta[..., 0], delta[..., 1])
    return np.arctan2(delta[..., 2], horizontal)


def distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.linalg.norm(np.asarray(b, dtype=float) - np.asarray(a, dtype=float), axis=-1)


@dataclass(frozen=True)
class CellChannels:
    """Channels of the ARIS at one cell center."""
    index: int
    h_bu: np.ndarray
    h_uk: List[np.ndarray]


@dataclass(frozen=True)
class ChannelSet:
    """Per-cell BS->ARIS and ARIS->user channels plus quadrature areas.

    Attributes:
        h_bu: (C, N, M) BS->ARIS matrices.
        h_uk: (C, K, N) ARIS->user vectors.
        areas: (C,) cell areas used as quadrature weights.
        seed: Seed the scattering was drawn from.
    """
    h_bu: np.ndarray
    h_uk: np.ndarray
    areas: np.ndarray
    seed: int

    @property
    def n_cells(self) -> int:
        return int(self.areas.shape[0])

    @property
    def n_users(self) -> int:
        return int(self.h_uk.shape[1])

    def cell(self, index: int) -> CellChannels:
        return CellChannels(index=index, h_bu=self.h_bu[index],
                            h_uk=[self.h_uk[index, k] for k in range(self.n_users)])


@dataclass(frozen=True)
class JammerLinkModel:
    """Line-of-sight jammer->ARIS channel H(x, j) for any horizontal jammer position j.

    H(x, j) = sqrt(beta |x~ - j~|^-alpha) a_N(angle(x, j)) a_L(angle(j, x))^H,
    rank one by construction.
    """
    cell_positions: np.ndarray
    jammer_altitude: float
    n_elements: int
    l_antennas: int
    alpha: float
    beta: float
    spacing: float = 0.5

    def lift(self, j) -> np.ndarray:
        j = np.asarray(j, dtype=float)
        return np.array([j[0], j[1], self.jammer_altitude])

    def factors(self, j) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Rank-one factors (gain (C,), RIS response (C, N), jammer response (C, L))."""
        jammer = self.lift(j)
        gain = np.sqrt(path_loss(distance(self.cell_positions, jammer), self.alpha, self.beta))
        a_r = array_response(elevation(self.cell_positions, jammer), self.n_elements, self.spacing)
        a_t = array_response(elevation(jammer, self.cell_positions), self.l_antennas, self.spacing)
        return np.atleast_1d(gain), a_r, a_t

    def matrix(self, j) -> np.ndarray:
        """(C, N, L) channel matrices at every cell."""
        gain, a_r, a_t = self.factors(j)
        return gain[:, None, None] * a_r[:, :, None] * np.conj(a_t)[:, None, :]


def generate_channels(scenario: Scenario) -> Tuple[ChannelSet, JammerLinkModel]:
    """Draw every BS->ARIS and ARIS->user channel from the "channel" substream.

    Args:
        scenario (Scenario): Resolved geometry and validated config.

    Returns:
        tuple: ``(ChannelSet, JammerLinkModel)``; identical for identical (config, seed).
    """
    config = scenario.config
    spacing = config.geometry.element_spacing
    cells = scenario.cell_positions
    rng = substream(config.seed, "channel")

    # BS -> ARIS: departure at the BS array, arrival at the RIS.
    d_bu = distance(scenario.bs[None, :], cells)
    a_ris = array_response(elevation(cells, scenario.bs[None, :]), config.n_elements, spacing)
    a_bs = array_response(elevation(scenario.bs[None, :], cells), config.m_antennas, spacing)
    los_bu = a_ris[:, :, None] * np.conj(a_bs)[:, None, :]
    h_bu = synth_rician(los_bu, config.kappa, d_bu, config.alpha, config.beta, rng)

    # ARIS -> user k, one N-vector per (cell, user).
    d_uk = distance(cells[:, None, :], scenario.users[None, :, :])
    a_user = array_response(elevation(cells[:, None, :], scenario.users[None, :, :]),
                            config.n_elements, spacing)
    h_uk = synth_rician(a_user[..., None], config.kappa, d_uk, config.alpha, config.beta, rng)[..., 0]

    channels = ChannelSet(h_bu=h_bu, h_uk=h_uk, areas=scenario.grid.areas.copy(), seed=config.seed)
    jlm = JammerLinkModel(
        cell_positions=cells,
        jammer_altitude=config.geometry.jammer_altitude,
        n_elements=config.n_elements,
        l_antennas=config.l_antennas,
        alpha=config.alpha,
        beta=config.beta,
        spacing=spacing,
    )
    logger.debug("Channels generated", cells=channels.n_cells, users=channels.n_users,
                 seed=config.seed)
    return channels, jlm


def _phases(theta) -> np.ndarray:
    return np.asarray(getattr(theta, "theta", theta))


def quadrature_weights(rho: DensityField, channels: ChannelSet) -> np.ndarray:
    """rho[c] * area[c], the midpoint-rule weight of each cell."""
    if rho.rho.shape[0] != channels.n_cells:
        raise GridMismatchError(
            f"density has {rho.rho.shape[0]} cells, channels have {channels.n_cells}"
        )
    return rho.rho * channels.areas


def cascaded_user_rows(theta, channels: ChannelSet) -> np.ndarray:
    """(C, K, N) rows h_uk^H(x) Theta(x) per cell and user."""
    phases = _phases(theta)
    if phases.shape != (channels.n_cells, channels.h_uk.shape[2]):
        raise GridMismatchError(
            f"phase field shape {phases.shape} does not match channels "
            f"({channels.n_cells}, {channels.h_uk.shape[2]})"
        )
    return np.conj(channels.h_uk) * phases[:, None, :]


def effective_bs_channels(theta, rho: DensityField, channels: ChannelSet) -> np.ndarray:
    """(K, M) aggregate BS->user rows; row k times w gives the received signal."""
    weights = quadrature_weights(rho, channels)
    rows = cascaded_user_rows(theta, channels)
    return np.einsum('c,ckn,cnm->km', weights, rows, channels.h_bu, optimize=True)


def effective_bs_channel(theta, rho: DensityField, channels: ChannelSet, k: int) -> np.ndarray:
    """Aggregate BS->user-k row of length M (midpoint sum of h^H Theta H_BU rho)."""
    return effective_bs_channels(theta, rho, channels)[k]


def jam_rows(theta, rho: DensityField, channels: ChannelSet, jlm: JammerLinkModel, j) -> np.ndarray:
    """(K, L) aggregate jammer->user rows; row k times v is h_eff,J,k(j, v).

    Uses the rank-one structure of the LoS link, so the cost is O(C K (N + L)).
    """
    weights = quadrature_weights(rho, channels)
    rows = cascaded_user_rows(theta, channels)
    gain, a_r, a_t = jlm.factors(j)
    projected = np.einsum('ckn,cn->ck', rows, a_r)
    return np.einsum('c,ck,cl->kl', weights * gain, projected, np.conj(a_t), optimize=True)


def check_unit(v: np.ndarray, name: str = "v", tol: float = 1e-9) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > tol:
        raise ContractViolationError(f"{name} must have unit norm, got {norm:.12g}")
    return v


def effective_jam_channel(theta, rho: DensityField, channels: ChannelSet, jlm: JammerLinkModel,
                          j, v: np.ndarray, k: int) -> complex:
    """Aggregate jamming channel of user k for jammer position j and beamformer v.

    Raises:
        ContractViolationError: ``v`` is not unit-norm within 1e-9.
    """
    v = check_unit(v)
    return complex(jam_rows(theta, rho, channels, jlm, j)[k] @ v)
