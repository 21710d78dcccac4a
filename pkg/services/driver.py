"""Alternating joint optimization, benchmark schemes and complexity timings."""

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence

import numpy as np

from logging_config import get_logger, get_run_logger
from schemas.config_schemas import SystemConfig
from services import ris
from services.beamform import design_beamformers
from services.channel import generate_channels
from services.density import dt_ara, net_marginal_gain, update_density
from services.jammer import optimize_jammer
from services.ris import random_phases
from services.scenario import build_grid, build_scenario, uniform_density
from services.state import JammerStrategy, LinkQuantities, SystemState, evaluate_links, sinr, sum_rate

__all__ = [
    "RunReport", "Scheme", "SystemState", "alternating_optimize", "complexity_timing",
    "evaluate_worst_case", "gain_field_timing", "initial_state", "run_scheme", "sinr", "sum_rate",
]

logger = get_logger(__name__)


class Scheme(str, Enum):
    PROPOSED = "proposed"
    S1_NON_ROBUST = "s1"
    S2_UNIFORM_OPT_PHASE = "s2"
    S3_UNIFORM_RANDOM_PHASE = "s3"


@dataclass
class RunReport:
    """Outcome of one alternating optimization run.

    ``trace[0]`` is the sum-rate of the initial state; ``trace[t]`` the value
    after outer iteration t. ``worst_case_sum_rate`` is the final defense
    evaluated against the jammer re-optimized over the full uncertainty disk
    (equal to ``design_sum_rate`` under the "design" evaluation mode).
    """
    scheme: str
    state: SystemState
    trace: List[float]
    gamma: np.ndarray
    rates: np.ndarray
    stage_seconds: Dict[str, float]
    converged: bool
    iterations: int
    design_sum_rate: float
    worst_case_sum_rate: float
    worst_case_jammer: JammerStrategy
    density_steps: List[float] = field(default_factory=list)

    @property
    def sum_rate(self) -> float:
        return self.worst_case_sum_rate


def _beams_for(state: SystemState, links: Optional[LinkQuantities] = None):
    config = state.config
    links = links or evaluate_links(state)
    return design_beamformers(links.h_eff, links.z_jam, config.p_jam, config.noise_power, config.p_bs)


def initial_state(config: SystemConfig, design_epsilon: Optional[float] = None) -> SystemState:
    """Uniform density, random phases, worst-case jammer for ``design_epsilon``, ZF+WF beams."""
    scenario = build_scenario(config)
    channels, jlm = generate_channels(scenario)
    grid = scenario.grid
    rho = uniform_density(grid, config.q_uavs, config.rho_max)
    theta = random_phases(config.seed, grid.n_cells, config.n_elements)
    j_hat = scenario.jammer_estimate[:2]
    placeholder = JammerStrategy(position=j_hat.copy(), v=np.eye(config.l_antennas, 1)[:, 0].astype(complex),
                                 lambda_max=0.0)
    state = SystemState(config=config, scenario=scenario, channels=channels, jlm=jlm,
                        rho=rho, theta=theta, jammer=placeholder)
    epsilon = config.epsilon if design_epsilon is None else design_epsilon
    state = state.replace(jammer=optimize_jammer(state, j_hat, epsilon))
    return state.replace(beams=_beams_for(state))


def beamform_step(state: SystemState) -> SystemState:
    """Redesign ZF+WF for the current channels; keep the old precoders if the rate drops."""
    links = evaluate_links(state)
    candidate = state.replace(beams=_beams_for(state, links))
    if state.beams is None or evaluate_links(candidate).sum_rate >= links.sum_rate:
        return candidate
    logger.debug("Beamform update rejected", sum_rate=links.sum_rate)
    return state


def evaluate_worst_case(state: SystemState, epsilon: Optional[float] = None) -> tuple:
    """Re-optimize the jammer against a fixed defense.

    Returns:
        tuple: ``(sum_rate, JammerStrategy)`` under the re-optimized jammer.
    """
    config = state.config
    epsilon = config.epsilon if epsilon is None else epsilon
    jammer = optimize_jammer(state, state.scenario.jammer_estimate[:2], epsilon)
    return sum_rate(state.replace(jammer=jammer)), jammer


def alternating_optimize(config: SystemConfig, *, design_epsilon: Optional[float] = None,
                         optimize_density: bool = True, optimize_phases: bool = True,
                         scheme: str = Scheme.PROPOSED.value) -> RunReport:
    """Joint anti-jamming optimization by block-coordinate ascent.

    The worst-case jammer is computed once for the design radius; each outer
    iteration then updates beamformers, phases and density in that order,
    each block accepted only if the sum-rate does not drop. Iteration stops
    when the improvement falls below ``eps_conv`` or after ``t_max`` rounds.

    Args:
        config (SystemConfig): Validated configuration.
        design_epsilon (float, optional): Radius the defense is designed for;
            defaults to ``config.epsilon``.
        optimize_density (bool): Run the DT-ARA block.
        optimize_phases (bool): Run the phase block.
        scheme (str): Label stored in the report.

    Returns:
        RunReport: Partial results are returned when ``t_max`` is hit.
    """
    solver = config.solver
    run_log = get_run_logger(scheme=scheme, seed=config.seed)
    stage_seconds = {"setup": 0.0, "beamform": 0.0, "phases": 0.0, "density": 0.0, "evaluation": 0.0}

    started = time.perf_counter()
    state = initial_state(config, design_epsilon)
    stage_seconds["setup"] = time.perf_counter() - started
    rate = sum_rate(state)
    trace = [rate]
    density_steps: List[float] = []
    converged = False
    iterations = 0
    run_log.info("Run initialized", stage="setup", iteration=0, sum_rate=rate,
                 seconds=stage_seconds["setup"], jammer=state.jammer.position.round(3).tolist())

    for iteration in range(1, solver.t_max + 1):
        iterations = iteration

        tick = time.perf_counter()
        state = beamform_step(state)
        stage_seconds["beamform"] += time.perf_counter() - tick

        if optimize_phases:
            tick = time.perf_counter()
            theta, phase_trace = ris.optimize_phases(state)
            state = state.replace(theta=theta)
            stage_seconds["phases"] += time.perf_counter() - tick
            run_log.debug("Phases updated", stage="phases", iteration=iteration,
                          inner_iterations=phase_trace.iterations, stop_reason=phase_trace.stop_reason)

        if optimize_density:
            tick = time.perf_counter()
            state, tau, fraction = update_density(state)
            density_steps.append(fraction)
            stage_seconds["density"] += time.perf_counter() - tick
            run_log.debug("Density updated", stage="density", iteration=iteration, tau=tau, fraction=fraction)

        new_rate = sum_rate(state)
        trace.append(new_rate)
        run_log.info("Outer iteration", stage="outer", iteration=iteration, sum_rate=new_rate,
                     seconds=time.perf_counter() - started)
        if abs(new_rate - rate) < solver.eps_conv:
            rate = new_rate
            converged = True
            break
        rate = new_rate

    if not converged and solver.t_max > 0:
        run_log.warning("Not converged within t_max", t_max=solver.t_max, sum_rate=rate)

    tick = time.perf_counter()
    if solver.evaluation == "worst_case":
        worst_rate, worst_jammer = evaluate_worst_case(state)
    else:
        worst_rate, worst_jammer = rate, state.jammer
    stage_seconds["evaluation"] = time.perf_counter() - tick

    links = evaluate_links(state)
    run_log.info("Run finished", stage="evaluation", iteration=iterations, sum_rate=rate,
                 worst_case_sum_rate=worst_rate, converged=converged,
                 seconds=time.perf_counter() - started)
    return RunReport(
        scheme=scheme,
        state=state,
        trace=trace,
        gamma=links.gamma,
        rates=links.rates,
        stage_seconds=stage_seconds,
        converged=converged,
        iterations=iterations,
        design_sum_rate=rate,
        worst_case_sum_rate=worst_rate,
        worst_case_jammer=worst_jammer,
        density_steps=density_steps,
    )


def run_scheme(scheme, config: SystemConfig) -> RunReport:
    """Run one benchmark scheme; all are evaluated under the same jammer protocol.

    * proposed: full joint optimization against the worst case over the disk.
    * s1: the defense is designed against a jammer fixed at the estimate.
    * s2: frozen uniform density, optimized phases, ZF+WF.
    * s3: frozen uniform density, random phases, ZF+WF.
    """
    scheme = Scheme(scheme)
    if scheme is Scheme.PROPOSED:
        return alternating_optimize(config, scheme=scheme.value)
    if scheme is Scheme.S1_NON_ROBUST:
        return alternating_optimize(config, design_epsilon=0.0, scheme=scheme.value)
    if scheme is Scheme.S2_UNIFORM_OPT_PHASE:
        return alternating_optimize(config, optimize_density=False, scheme=scheme.value)
    return alternating_optimize(config, optimize_density=False, optimize_phases=False,
                                scheme=scheme.value)


def _median_seconds(func, repeats: int) -> float:
    samples = []
    for _ in range(repeats):
        tick = time.perf_counter()
        func()
        samples.append(time.perf_counter() - tick)
    return float(np.median(samples))


def complexity_timing(config: SystemConfig, q_values: Sequence[float], repeats: int = 5) -> List[Dict[str, float]]:
    """Median DT-ARA wall-clock per swarm size on one fixed gain field."""
    state = initial_state(config)
    gain = net_marginal_gain(state)
    solver = config.solver
    rows = []
    for q in q_values:
        seconds = _median_seconds(
            lambda: dt_ara(gain, q, config.rho_max, solver.dt_ara_tol, solver.dt_ara_method), repeats)
        rows.append({"q": float(q), "cells": int(gain.g.size), "seconds": seconds})
        logger.info("DT-ARA timed", q=q, cells=int(gain.g.size), seconds=seconds)
    return rows


def gain_field_timing(config: SystemConfig, grid_sizes: Sequence[tuple], repeats: int = 3) -> List[Dict[str, float]]:
    """Median net-marginal-gain wall-clock per grid size."""
    rows = []
    for dims in grid_sizes:
        sized = config.with_overrides(grid_dims=tuple(dims))
        state = initial_state(sized)
        seconds = _median_seconds(lambda: net_marginal_gain(state), repeats)
        rows.append({"cells": int(build_grid(sized).n_cells), "seconds": seconds})
    return rows
