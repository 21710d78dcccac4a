"""Worst-case jammer: optimal beamformer (Rayleigh quotient) and position.

The jammer maximizes the total received jamming power sum_k |b_k^H v|^2 =
v^H R(j) v. For a fixed position the best unit v is the principal
eigenvector of R(j); the position is then searched inside the disk of
radius epsilon around the estimate, comparing an interior ascent candidate
with a boundary candidate refined along the circle.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from logging_config import get_logger
from schemas.config_schemas import SolverConfig
from services.channel import jam_rows
from services.errors import ContractViolationError
from services.state import JammerStrategy, SystemState

logger = get_logger(__name__)

EIGEN_TIE_TOL = 1e-9
FLAT_GRADIENT_TOL = 1e-12
CERTIFY_RADIUS = 0.5
CERTIFY_DIRECTIONS = 16


@dataclass(frozen=True)
class JamCovariance:
    """R(j) = sum_k b_k b_k^H with b_k as the rows of ``b`` (K, L)."""
    r: np.ndarray
    b: np.ndarray


def jamming_covariance(theta, rho, channels, jlm, j) -> JamCovariance:
    """Spatial jamming covariance seen through the swarm for a jammer at ``j``."""
    b = np.conj(jam_rows(theta, rho, channels, jlm, j))
    r = b.T @ np.conj(b)
    r = 0.5 * (r + r.conj().T)
    return JamCovariance(r=r, b=b)


def principal_eigpair(r) -> Tuple[float, np.ndarray]:
    """Top eigenvalue and unit eigenvector of a Hermitian PSD matrix.

    The eigenvector phase is fixed by making its largest-magnitude entry
    real-positive. Among eigenvalues within 1e-9 relative of the top one,
    the lowest index of the ascending decomposition is returned.
    """
    matrix = r.r if isinstance(r, JamCovariance) else np.asarray(r, dtype=complex)
    values, vectors = np.linalg.eigh(matrix)
    top = values[-1]
    tied = np.flatnonzero(values >= top - EIGEN_TIE_TOL * max(abs(top), 1e-300))
    index = int(tied[0])
    v = vectors[:, index]
    pivot = v[int(np.argmax(np.abs(v)))]
    v = v * (np.conj(pivot) / abs(pivot))
    v = v / np.linalg.norm(v)
    return max(float(top), 0.0), v


def covariance_at(state: SystemState, j) -> JamCovariance:
    return jamming_covariance(state.theta, state.rho, state.channels, state.jlm, j)


def lambda_at(state: SystemState, j) -> float:
    return principal_eigpair(covariance_at(state, j))[0]


def lambda_max_gradient(state: SystemState, j, step: Optional[float] = None) -> np.ndarray:
    """Gradient of lambda_max with respect to the horizontal jammer position.

    Uses first-order eigenvalue perturbation v^H (dR/dj_i) v with dR/dj_i by
    central differences; falls back to central differences of lambda_max
    itself when the top eigenvalue is not simple.
    """
    h = step if step is not None else state.config.solver.jammer_fd_step
    j = np.asarray(j, dtype=float)
    values, vectors = np.linalg.eigh(covariance_at(state, j).r)
    top = values[-1]
    simple = values.size == 1 or (values[-1] - values[-2]) > EIGEN_TIE_TOL * abs(top)

    gradient = np.zeros(2)
    if simple:
        v = vectors[:, -1]
        for axis in range(2):
            offset = np.zeros(2)
            offset[axis] = h
            delta = covariance_at(state, j + offset).r - covariance_at(state, j - offset).r
            gradient[axis] = float(np.real(np.conj(v) @ delta @ v)) / (2.0 * h)
        return gradient

    logger.info("Degenerate top eigenvalue, differencing lambda_max", position=j.tolist(),
                top=float(top), second=float(values[-2]))
    for axis in range(2):
        offset = np.zeros(2)
        offset[axis] = h
        gradient[axis] = (lambda_at(state, j + offset) - lambda_at(state, j - offset)) / (2.0 * h)
    return gradient


def project_to_disk(j, center, radius: float) -> np.ndarray:
    offset = np.asarray(j, dtype=float) - center
    norm = float(np.linalg.norm(offset))
    if norm <= radius:
        return np.asarray(j, dtype=float)
    return center + offset * (radius / norm)


def _interior_ascent(state: SystemState, start: np.ndarray, lam: float, center: np.ndarray,
                     radius: float, solver: SolverConfig) -> Tuple[np.ndarray, float]:
    """Projected gradient ascent on lambda_max along normalized gradients."""
    position, step = start, solver.jammer_step
    for _ in range(solver.jammer_max_steps):
        if step < solver.jammer_min_step:
            break
        gradient = lambda_max_gradient(state, position)
        norm = float(np.linalg.norm(gradient))
        if norm <= FLAT_GRADIENT_TOL * max(lam, 1e-300):
            break
        trial = project_to_disk(position + step * gradient / norm, center, radius)
        trial_lam = lambda_at(state, trial)
        if trial_lam > lam:
            position, lam = trial, trial_lam
        else:
            step *= 0.5
    return position, lam


def certify_local_max(state: SystemState, j: np.ndarray, lam: float, center: np.ndarray,
                      radius: float) -> bool:
    """True when no feasible neighbour at 0.5 m (16 directions) beats ``lam``."""
    angles = 2.0 * np.pi * np.arange(CERTIFY_DIRECTIONS) / CERTIFY_DIRECTIONS
    for angle in angles:
        neighbour = j + CERTIFY_RADIUS * np.array([np.cos(angle), np.sin(angle)])
        if np.linalg.norm(neighbour - center) > radius:
            continue
        if lambda_at(state, neighbour) > lam * (1.0 + 1e-12):
            return False
    return True


def _on_circle(center: np.ndarray, radius: float, angle: float) -> np.ndarray:
    return center + radius * np.array([np.cos(angle), np.sin(angle)])


def _boundary_refine(state: SystemState, center: np.ndarray, radius: float, angle: float,
                     lam: float, solver: SolverConfig) -> Tuple[np.ndarray, float]:
    """Ascent in the angle along ||j - center|| = radius, halving the arc on failure."""
    scan = max(solver.jammer_boundary_scan, 1)
    arc = max(np.pi / scan, solver.jammer_step / radius)
    min_arc = solver.jammer_min_step / radius
    for _ in range(solver.jammer_max_steps):
        if arc < min_arc:
            break
        moved = False
        for trial_angle in (angle + arc, angle - arc):
            trial_lam = lambda_at(state, _on_circle(center, radius, trial_angle))
            if trial_lam > lam:
                angle, lam, moved = trial_angle, trial_lam, True
                break
        if not moved:
            arc *= 0.5
    return _on_circle(center, radius, angle), lam


def optimize_jammer(state: SystemState, j_hat, epsilon: float) -> JammerStrategy:
    """Worst-case jammer position within ``epsilon`` of ``j_hat`` and its beamformer.

    Args:
        state (SystemState): Provides theta, rho, channels and the link model.
        j_hat: Estimated horizontal jammer position.
        epsilon (float): Uncertainty radius in meters.

    Returns:
        JammerStrategy: Best of the interior and refined boundary candidates;
            ``flat`` is set when the landscape gives no direction at ``j_hat``.
    """
    if epsilon < 0.0:
        raise ContractViolationError(f"uncertainty radius must be >= 0, got {epsilon:g}")
    solver = state.config.solver
    center = np.asarray(j_hat, dtype=float)
    lam_hat, v_hat = principal_eigpair(covariance_at(state, center))
    if epsilon == 0.0:
        return JammerStrategy(position=center.copy(), v=v_hat, lambda_max=lam_hat)

    gradient = lambda_max_gradient(state, center)
    norm = float(np.linalg.norm(gradient))
    if lam_hat == 0.0 or norm <= FLAT_GRADIENT_TOL * lam_hat:
        logger.warning("Flat jamming landscape at the estimate", position=center.tolist(),
                       lambda_max=lam_hat, gradient_norm=norm)
        return JammerStrategy(position=center.copy(), v=v_hat, lambda_max=lam_hat, flat=True)

    candidates: List[Tuple[np.ndarray, float, str]] = []

    interior, lam_interior = _interior_ascent(state, center, lam_hat, center, epsilon, solver)
    inside = np.linalg.norm(interior - center) < epsilon - 1e-6
    if inside and certify_local_max(state, interior, lam_interior, center, epsilon):
        candidates.append((interior, lam_interior, "interior"))
    else:
        candidates.append((interior, lam_interior, "ascent"))

    starts = [np.arctan2(gradient[1], gradient[0])]
    starts += list(2.0 * np.pi * np.arange(solver.jammer_boundary_scan) / max(solver.jammer_boundary_scan, 1))
    scored = [(lambda_at(state, _on_circle(center, epsilon, a)), a) for a in starts]
    best_lam, best_angle = max(scored, key=lambda item: item[0])
    boundary, lam_boundary = _boundary_refine(state, center, epsilon, best_angle, best_lam, solver)
    candidates.append((boundary, lam_boundary, "boundary"))

    position, _, kind = max(candidates, key=lambda item: item[1])
    lam, v = principal_eigpair(covariance_at(state, position))
    logger.debug("Jammer optimized", kind=kind, position=np.round(position, 3).tolist(),
                 lambda_max=lam, lambda_hat=lam_hat)
    return JammerStrategy(position=position, v=v, lambda_max=lam)


def landscape(state: SystemState, j_hat, epsilon: float, radial: int = 10,
              angular: int = 36) -> List[Tuple[float, float, float]]:
    """lambda_max sampled on a polar grid over the uncertainty disk (centre first)."""
    center = np.asarray(j_hat, dtype=float)
    rows = [(float(center[0]), float(center[1]), lambda_at(state, center))]
    if epsilon <= 0.0:
        return rows
    for ring in range(1, radial + 1):
        radius = epsilon * ring / radial
        for step in range(angular):
            point = _on_circle(center, radius, 2.0 * np.pi * step / angular)
            rows.append((float(point[0]), float(point[1]), lambda_at(state, point)))
    return rows


def sample_disk(center, radius: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform samples inside the disk, (count, 2)."""
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, count))
    angle = rng.uniform(0.0, 2.0 * np.pi, count)
    return np.asarray(center, dtype=float) + np.column_stack([r * np.cos(angle), r * np.sin(angle)])
