"""Riemannian ascent of the continuous RIS phase field on the product of circles.

Gradient convention: for a perturbation dtheta of the field the sum-rate
changes by sum_{c,n} 2 Re(conj(grad[c, n]) * dtheta[c, n] * area[c]).
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from logging_config import get_logger
from schemas.config_schemas import SolverConfig
from services.errors import StepRejectedError
from services.scenario import substream
from services.state import LinkQuantities, SystemState, evaluate_links

logger = get_logger(__name__)

RETRACT_FLOOR = 1e-12


@dataclass(frozen=True)
class PhaseField:
    """Unit-modulus reflection coefficients, (C, N)."""
    theta: np.ndarray

    def max_modulus_error(self) -> float:
        return float(np.max(np.abs(np.abs(self.theta) - 1.0))) if self.theta.size else 0.0


def random_phases(seed: int, n_cells: int, n_elements: int) -> PhaseField:
    """exp(i u) with u uniform on [0, 2 pi), from the "phase-init" substream."""
    rng = substream(seed, "phase-init")
    return PhaseField(np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, (n_cells, n_elements))))


@dataclass(frozen=True)
class GradientWorkspace:
    """Snapshot of link values and per-cell responses for one state.

    Attributes:
        links: Aggregate link values (z, z_jam, floor, gamma).
        weight: (K,) 1 / ((1 + gamma_k) ln 2).
        hw: (C, N, K) H_BU(c) w_i at every cell.
        jam_field: (C, N) H_J(c, j) v at every cell.
        responses: (C, K, K) h_ck^H Theta_c H_BU(c) w_i.
        jam_responses: (C, K) h_ck^H Theta_c H_J(c, j) v.
    """
    links: LinkQuantities
    weight: np.ndarray
    hw: np.ndarray
    jam_field: np.ndarray
    responses: np.ndarray
    jam_responses: np.ndarray
    h_uk: np.ndarray = field(repr=False)

    @property
    def z_b(self) -> np.ndarray:
        return np.diag(self.links.z)

    @property
    def z_j(self) -> np.ndarray:
        return self.links.z_jam

    @property
    def c(self) -> np.ndarray:
        return self.links.floor

    @property
    def gamma(self) -> np.ndarray:
        return self.links.gamma

    @property
    def c_b(self) -> np.ndarray:
        """(C, K, N) signal coefficients conj(h_ckn) [H_BU(c) w_k]_n."""
        return np.conj(self.h_uk) * np.transpose(self.hw, (0, 2, 1))

    @property
    def c_j(self) -> np.ndarray:
        """(C, K, N) jamming coefficients conj(h_ckn) [H_J(c, j) v]_n."""
        return np.conj(self.h_uk) * self.jam_field[:, None, :]


def build_workspace(state: SystemState) -> GradientWorkspace:
    links = evaluate_links(state)
    channels = state.channels
    theta = state.theta.theta
    w = state.beams.w
    hw = np.einsum('cnm,mi->cni', channels.h_bu, w, optimize=True)
    gain, a_r, a_t = state.jlm.factors(state.jammer.position)
    jam_field = gain[:, None] * a_r * (np.conj(a_t) @ state.jammer.v)[:, None]
    rows = np.conj(channels.h_uk) * theta[:, None, :]
    responses = np.einsum('ckn,cni->cki', rows, hw, optimize=True)
    jam_responses = np.einsum('ckn,cn->ck', rows, jam_field)
    weight = 1.0 / ((1.0 + links.gamma) * np.log(2.0))
    return GradientWorkspace(links=links, weight=weight, hw=hw, jam_field=jam_field,
                             responses=responses, jam_responses=jam_responses, h_uk=channels.h_uk)


def _coefficients(workspace: GradientWorkspace, p_jam: float) -> Tuple[np.ndarray, np.ndarray]:
    """(K, K) weights of z[k, i] terms and (K,) weights of the jamming term."""
    links = workspace.links
    denominator = links.denominator
    penalty = -workspace.weight * links.signal / denominator ** 2
    coeff = penalty[:, None] * links.z
    k_users = coeff.shape[0]
    idx = np.arange(k_users)
    coeff[idx, idx] = workspace.weight * links.z[idx, idx] / denominator
    jam_coeff = penalty * p_jam * links.z_jam
    return coeff, jam_coeff


def euclidean_gradient(state: SystemState, workspace: Optional[GradientWorkspace] = None) -> np.ndarray:
    """Functional derivative of the sum-rate with respect to theta, (C, N).

    Inter-user leakage is included; under exact zero-forcing the leakage
    terms vanish and the signal-enhancement minus jamming-amplification form
    remains.
    """
    workspace = workspace or build_workspace(state)
    coeff, jam_coeff = _coefficients(workspace, state.config.p_jam)
    h = workspace.h_uk
    signal = np.einsum('ki,ckn,cni->cn', coeff, h, np.conj(workspace.hw), optimize=True)
    jamming = np.einsum('k,ckn,cn->cn', jam_coeff, h, np.conj(workspace.jam_field), optimize=True)
    return state.rho.rho[:, None] * (signal + jamming)


def tangent_project(theta, g) -> np.ndarray:
    """Remove the radial component: g - Re(g conj(theta)) theta."""
    theta = np.asarray(getattr(theta, "theta", theta))
    g = np.asarray(g, dtype=complex)
    return g - np.real(g * np.conj(theta)) * theta


def retract(theta, xi, step: float) -> PhaseField:
    """Entrywise normalization of theta + step * xi back onto the unit circle.

    Raises:
        StepRejectedError: Some entry of theta + step * xi is below 1e-12 in modulus.
    """
    theta = np.asarray(getattr(theta, "theta", theta))
    moved = theta + step * np.asarray(xi, dtype=complex)
    modulus = np.abs(moved)
    if np.any(modulus < RETRACT_FLOOR):
        raise StepRejectedError(f"retraction collapsed an entry at step {step:g}")
    return PhaseField(moved / modulus)


def riemannian_norm(xi: np.ndarray, areas: np.ndarray) -> float:
    """Area-weighted L2 norm of a tangent field."""
    return float(np.sqrt(np.sum(areas[:, None] * np.abs(xi) ** 2)))


@dataclass
class PhaseTrace:
    sum_rates: List[float]
    iterations: int = 0
    stop_reason: str = "max_iterations"
    gradient_norms: List[float] = field(default_factory=list)


def optimize_phases(state: SystemState, opts: Optional[SolverConfig] = None) -> Tuple[PhaseField, PhaseTrace]:
    """Armijo backtracking Riemannian ascent on the phase field with beamformers, density and jammer fixed.

    Each iteration projects the Euclidean gradient onto the tangent space,
    scales it to unit peak magnitude and retracts. The first trial step is
    twice the last accepted one (capped at ``ris_initial_step``) and is
    multiplied by ``ris_backtrack`` until the Armijo condition holds.
    Iteration stops once the tangent gradient norm falls below ``ris_tol``
    times its initial value, or below the absolute floor ``ris_abs_tol``.

    Args:
        state (SystemState): Current state; ``state.beams`` must be set.
        opts (SolverConfig, optional): Overrides ``state.config.solver``.

    Returns:
        tuple: ``(PhaseField, PhaseTrace)``; the trace records every accepted sum-rate.
    """
    opts = opts or state.config.solver
    areas = state.channels.areas
    current = state
    rate = evaluate_links(current).sum_rate
    trace = PhaseTrace(sum_rates=[rate])
    initial_norm = None
    step = opts.ris_initial_step

    for iteration in range(1, opts.ris_max_iterations + 1):
        trace.iterations = iteration
        gradient = euclidean_gradient(current)
        xi = tangent_project(current.theta, gradient)
        norm = riemannian_norm(xi, areas)
        trace.gradient_norms.append(norm)
        if initial_norm is None:
            initial_norm = norm
        if norm <= max(opts.ris_tol * initial_norm, opts.ris_abs_tol * (1.0 + abs(rate))):
            trace.stop_reason = "gradient"
            break

        peak = float(np.max(np.abs(xi)))
        direction = xi / peak
        # Directional derivative of the sum-rate along ``direction``.
        slope = 2.0 * norm ** 2 / peak
        step = min(step / opts.ris_backtrack, opts.ris_initial_step)
        accepted = None
        for _ in range(opts.ris_max_halvings + 1):
            try:
                candidate = retract(current.theta, direction, step)
            except StepRejectedError:
                step *= opts.ris_backtrack
                continue
            trial = current.replace(theta=candidate)
            trial_rate = evaluate_links(trial).sum_rate
            if trial_rate > rate and trial_rate >= rate + opts.ris_armijo * step * slope:
                accepted = (trial, trial_rate)
                break
            step *= opts.ris_backtrack

        if accepted is None:
            trace.stop_reason = "stationary"
            break
        improvement = accepted[1] - rate
        current, rate = accepted
        trace.sum_rates.append(rate)
        if improvement < opts.ris_improvement_tol * (1.0 + abs(rate)):
            trace.stop_reason = "improvement"
            break

    logger.debug("Phase optimization finished", iterations=trace.iterations,
                 stop_reason=trace.stop_reason, sum_rate=rate, step=step)
    return current.theta, trace
