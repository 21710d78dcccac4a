"""UAV density optimization: net marginal gain and DT-ARA spatial water-filling.

G(c) is the first-order change of the sum-rate per unit of density added at
cell c. DT-ARA fills the highest-gain cells at rho_max until the swarm budget
is spent; at most one marginal cell receives a fractional density.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from logging_config import get_logger
from schemas.error_schemas import ErrorCode, FieldError
from services.beamform import design_beamformers
from services.errors import ConfigurationError, SingularChannelError
from services.ris import GradientWorkspace, build_workspace
from services.scenario import DensityField
from services.state import SystemState, evaluate_links

logger = get_logger(__name__)


@dataclass(frozen=True)
class GainField:
    """Net marginal gain per cell plus the responses it was built from.

    Attributes:
        g: (C,) net marginal gain.
        f: (C, K) own-signal responses f_k(c).
        g_jam: (C, K) jamming responses g_k(c).
        areas: (C,) cell areas.
    """
    g: np.ndarray
    f: np.ndarray
    g_jam: np.ndarray
    areas: np.ndarray


def response_functions(state: SystemState, cell: int, k: int) -> Tuple[complex, complex]:
    """Signal and jamming responses of user k through an ARIS at ``cell``."""
    channels = state.channels
    row = np.conj(channels.h_uk[cell, k]) * state.theta.theta[cell]
    f_k = row @ (channels.h_bu[cell] @ state.beams.w[:, k])
    gain, a_r, a_t = state.jlm.factors(state.jammer.position)
    g_k = row @ (gain[cell] * a_r[cell] * (np.conj(a_t[cell]) @ state.jammer.v))
    return complex(f_k), complex(g_k)


def net_marginal_gain(state: SystemState, workspace: GradientWorkspace = None) -> GainField:
    """G(c) for every cell from a frozen snapshot of z, gamma and the floors.

    With zero leakage this is sum_k (2/ln 2) [Re(z_k* f_k) - P_J gamma_k Re(z_J,k* g_k)]
    / (|z_k|^2 + c_k); leakage terms are kept when present.
    """
    workspace = workspace or build_workspace(state)
    links = workspace.links
    denominator = links.denominator
    penalty = workspace.weight * links.signal / denominator ** 2

    # 2 Re(conj(z[k, i]) F[c, k, i]) for every (c, k, i)
    cross = 2.0 * np.real(np.conj(links.z)[None, :, :] * workspace.responses)
    k_users = links.z.shape[0]
    idx = np.arange(k_users)
    own = cross[:, idx, idx]
    leakage = cross.sum(axis=2) - own
    jamming = 2.0 * state.config.p_jam * np.real(np.conj(links.z_jam)[None, :] * workspace.jam_responses)

    g = (workspace.weight / denominator)[None, :] * own - penalty[None, :] * (leakage + jamming)
    return GainField(
        g=g.sum(axis=1),
        f=workspace.responses[:, idx, idx],
        g_jam=workspace.jam_responses,
        areas=state.channels.areas,
    )


def _check_budget(q: float, capacity: float) -> None:
    if q > capacity * (1.0 + 1e-12):
        raise ConfigurationError(
            f"Q exceeds density capacity {capacity:g}",
            [FieldError(field='q_uavs', message=f"Q exceeds density capacity {capacity:g}",
                        code=ErrorCode.BUDGET_INFEASIBLE, value=q)],
        )


def _fill(order: np.ndarray, q: float, rho_max: float, areas: np.ndarray, rho: np.ndarray):
    """Fill cells in ``order`` at rho_max; returns the index of the fractional cell or None."""
    remaining = q
    for idx in order:
        if remaining <= 1e-12 * max(q, 1.0):
            return None
        capacity = rho_max * areas[idx]
        if remaining >= capacity * (1.0 - 1e-12):
            rho[idx] = rho_max
            remaining -= capacity
        else:
            rho[idx] = remaining / areas[idx]
            return int(idx)
    return None


def _sort_allocate(g: np.ndarray, areas: np.ndarray, q: float, rho_max: float) -> Tuple[np.ndarray, float]:
    order = np.lexsort((np.arange(g.size), -g))
    rho = np.zeros_like(g)
    marginal = _fill(order, q, rho_max, areas, rho)
    if marginal is not None:
        return rho, float(g[marginal])
    filled = int(np.count_nonzero(rho))
    if filled == 0:
        return rho, float(g[order[0]])
    if filled == g.size:
        return rho, float(g.min() - 1.0)
    return rho, 0.5 * float(g[order[filled - 1]] + g[order[filled]])


def _bisection_allocate(g: np.ndarray, areas: np.ndarray, q: float, rho_max: float,
                        tol: float) -> Tuple[np.ndarray, float]:
    lo, hi = float(g.min()) - 1.0, float(g.max()) + 1.0
    cell_capacity = rho_max * areas

    def allocated(tau):
        return float(cell_capacity[g > tau].sum())

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if allocated(mid) <= q:
            hi = mid
        else:
            lo = mid

    rho = np.where(g > hi, rho_max, 0.0)
    remaining = q - allocated(hi)
    bracket = np.flatnonzero((g > lo) & (g <= hi))
    bracket = bracket[np.lexsort((bracket, -g[bracket]))]
    _fill(bracket, remaining, rho_max, areas, rho)
    return rho, 0.5 * (lo + hi)


def dt_ara(gain: GainField, q: float, rho_max: float, tol: float = 1e-10,
           method: str = "sort") -> Tuple[DensityField, float]:
    """Spatial water-filling of the swarm budget over the gain field.

    Cells above the threshold tau receive rho_max, cells below receive zero
    and the marginal cell receives the remainder so that sum(rho * area) = q.
    Ties are filled in lowest-index order.

    Args:
        gain (GainField): Net marginal gain per cell.
        q (float): Swarm budget.
        rho_max (float): Density cap.
        tol (float): Bracket width for the bisection method.
        method (str): ``"sort"`` (exact sort-and-scan) or ``"bisection"`` on tau.

    Returns:
        tuple: ``(DensityField, tau)``.

    Raises:
        ConfigurationError: ``q`` exceeds ``rho_max`` times the total area.
    """
    g = np.asarray(gain.g, dtype=float)
    areas = np.asarray(gain.areas, dtype=float)
    capacity = rho_max * float(areas.sum())
    _check_budget(q, capacity)

    if q >= capacity * (1.0 - 1e-12):
        return DensityField(np.full(g.size, rho_max)), float(g.min() - 1.0)
    if method == "bisection":
        rho, tau = _bisection_allocate(g, areas, q, rho_max, tol)
    else:
        rho, tau = _sort_allocate(g, areas, q, rho_max)
    return DensityField(rho), tau


def with_redesigned_beams(state: SystemState) -> SystemState:
    """ZF+WF beamformers matched to the state's density and phases.

    Raises:
        SingularChannelError: When the effective channel cannot be zero-forced.
    """
    config = state.config
    links = evaluate_links(state)
    beams = design_beamformers(links.h_eff, links.z_jam, config.p_jam, config.noise_power, config.p_bs)
    return state.replace(beams=beams)


def update_density(state: SystemState) -> Tuple[SystemState, float, float]:
    """One density block update: DT-ARA on the current gain field.

    Every candidate density is scored with beamformers re-designed for it,
    since stale zero-forcing precoders leak between users as soon as the
    density moves. The full DT-ARA target is taken when it does not lower the
    sum-rate; otherwise the step toward it is halved up to 30 times, and the
    old state is kept if nothing improves. Without damping the target is
    always taken.

    Returns:
        tuple: ``(SystemState with new density and beams, tau, accepted step fraction)``.
    """
    config = state.config
    gain = net_marginal_gain(state)
    target, tau = dt_ara(gain, config.q_uavs, config.rho_max, config.solver.dt_ara_tol,
                         config.solver.dt_ara_method)
    if not config.solver.density_damping:
        moved = state.replace(rho=target)
        try:
            return with_redesigned_beams(moved), tau, 1.0
        except SingularChannelError:
            logger.warning("Beamformers kept after density update", tau=tau)
            return moved, tau, 1.0

    base = evaluate_links(state).sum_rate
    old = state.rho.rho
    fraction = 1.0
    for _ in range(31):
        try:
            candidate = with_redesigned_beams(state.replace(rho=DensityField(old + fraction * (target.rho - old))))
        except SingularChannelError:
            fraction *= 0.5
            continue
        if evaluate_links(candidate).sum_rate >= base:
            if fraction < 1.0:
                logger.debug("Density step damped", fraction=fraction, tau=tau)
            return candidate, tau, fraction
        fraction *= 0.5

    logger.info("Density update rejected", sum_rate=base, tau=tau)
    return state, tau, 0.0
