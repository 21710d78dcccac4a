"""BS precoding: zero-forcing directions and water-filling power allocation."""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from logging_config import get_logger
from services.errors import DomainError, SingularChannelError

logger = get_logger(__name__)

ZF_CONDITION_LIMIT = 1e8


@dataclass(frozen=True)
class BeamformSet:
    """Composed precoders w_k = sqrt(p_k) * w~_k.

    Attributes:
        w: (M, K) precoders, column k serves user k.
        directions: (M, K) unit-norm zero-forcing directions w~_k.
        powers: (K,) per-user transmit powers.
        water_level: Water level of the allocation.
    """
    w: np.ndarray
    directions: np.ndarray
    powers: np.ndarray
    water_level: float

    @property
    def total_power(self) -> float:
        return float(np.sum(np.abs(self.w) ** 2))


def zf_matrix(h_eff: np.ndarray) -> np.ndarray:
    """Zero-forcing directions with unit-norm columns.

    W = H^H (H H^H)^-1 Gamma, Gamma scaling each column to unit norm, so
    H W is diagonal with real-positive entries 1/||raw column k||.

    Args:
        h_eff (np.ndarray): (K, M) aggregate channel rows.

    Returns:
        np.ndarray: (M, K) directions.

    Raises:
        SingularChannelError: K > M or cond(H) >= 1e8; regularize the channel
            (more cells, fewer users) before zero-forcing.
    """
    h_eff = np.atleast_2d(np.asarray(h_eff, dtype=complex))
    k_users, m_antennas = h_eff.shape
    if k_users > m_antennas:
        raise SingularChannelError(
            f"zero-forcing needs K <= M, got K={k_users}, M={m_antennas}"
        )
    condition = np.linalg.cond(h_eff)
    if not np.isfinite(condition) or condition >= ZF_CONDITION_LIMIT:
        raise SingularChannelError(
            f"effective channel condition number {condition:.3g} exceeds {ZF_CONDITION_LIMIT:.0e}; "
            "regularize the channel before zero-forcing"
        )
    gram = h_eff @ h_eff.conj().T
    raw = h_eff.conj().T @ np.linalg.solve(gram, np.eye(k_users))
    return raw / np.linalg.norm(raw, axis=0, keepdims=True)


def zf_gains(h_eff: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """|h_eff,k w~_k| for every user."""
    return np.abs(np.einsum('km,mk->k', h_eff, directions))


def water_fill(levels, p_total: float) -> Tuple[np.ndarray, float]:
    """Exact water-filling p_k = [eta - levels_k]^+ by sort-and-scan.

    Args:
        levels: Positive noise levels per channel.
        p_total (float): Positive power budget.

    Returns:
        tuple: ``(powers, eta)`` with ``sum(powers) == p_total``.
    """
    levels = np.asarray(levels, dtype=float)
    if levels.ndim != 1 or levels.size == 0 or np.any(levels <= 0.0):
        raise DomainError("water-filling levels must be a non-empty vector of positive values")
    if p_total <= 0.0:
        raise DomainError(f"water-filling budget must be positive, got {p_total:g}")

    ordered = np.sort(levels)
    eta = ordered[0] + p_total
    for active in range(levels.size, 0, -1):
        candidate = (p_total + ordered[:active].sum()) / active
        if candidate > ordered[active - 1]:
            eta = candidate
            break
    powers = np.maximum(eta - levels, 0.0)
    return powers, float(eta)


def compose_beamformers(w_zf: np.ndarray, powers, water_level: float = 0.0) -> BeamformSet:
    powers = np.asarray(powers, dtype=float)
    w = w_zf * np.sqrt(powers)[None, :]
    return BeamformSet(w=w, directions=w_zf, powers=powers, water_level=float(water_level))


def design_beamformers(h_eff: np.ndarray, z_jam: np.ndarray, p_jam: float,
                       noise_power: float, p_bs: float) -> BeamformSet:
    """Zero-forcing plus water-filling against the current jamming floor.

    Levels are (|z_jam,k|^2 P_J + sigma^2) / |h_eff,k w~_k|^2 so that p_k over
    the level is the interference-free SINR under unit-norm directions.
    """
    directions = zf_matrix(h_eff)
    gains = zf_gains(h_eff, directions)
    levels = (np.abs(z_jam) ** 2 * p_jam + noise_power) / gains ** 2
    powers, eta = water_fill(levels, p_bs)
    logger.debug("Beamformers designed", powers=powers.round(6).tolist(), water_level=eta)
    return compose_beamformers(directions, powers, eta)
