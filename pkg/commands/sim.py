"""``flask sim`` / ``aris-sim`` command group.

Exit codes: 0 on success, 1 when a run fails numerically, 2 when the
configuration is unreadable or invalid (the validation report is printed to
stderr as JSON).
"""

import json
import os
import time
import tomllib
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List

import click
from flask import current_app
from flask.cli import AppGroup
from pydantic import ValidationError

from logging_config import get_logger
from schemas.config_schemas import SweepSpec, merge_raw, parse_overrides, resolve_config
from schemas.error_schemas import ErrorResponse, ErrorResponseBuilder
from services import reporting
from services.density import net_marginal_gain
from services.driver import Scheme, complexity_timing, gain_field_timing, initial_state, run_scheme
from services.errors import SimulationError
from services.jammer import landscape
from services.run_service import RunService

sim_cli = AppGroup('sim', help="Run, sweep and inspect ARIS anti-jamming simulations.")
logger = get_logger(__name__)

EXIT_RUN_FAILED = 1
EXIT_INVALID_CONFIG = 2

SCHEME_CHOICE = click.Choice([scheme.value for scheme in Scheme])


def _fail(response: ErrorResponse, code: int):
    click.echo(json.dumps(response.model_dump(mode='json'), indent=2), err=True)
    click.get_current_context().exit(code)


def _overrides(pairs) -> Dict:
    try:
        return parse_overrides(pairs)
    except ValueError as exc:
        _fail(ErrorResponseBuilder.validation_error(str(exc)), EXIT_INVALID_CONFIG)


def _load(config_path, seed, pairs):
    overrides = _overrides(pairs)
    config, err = resolve_config(config_path, overrides, seed)
    if err:
        _fail(err, EXIT_INVALID_CONFIG)
    return config


def _run(scheme, config):
    try:
        return run_scheme(scheme, config)
    except SimulationError as exc:
        _fail(exc.to_response(), EXIT_RUN_FAILED)


def config_options(func):
    """--config/--seed/--set shared by every command that builds a scenario."""
    func = click.option('--set', 'pairs', multiple=True, metavar='KEY=VALUE',
                        help="Override a config key (dotted for [geometry]/[solver]).")(func)
    func = click.option('--seed', type=click.IntRange(min=0), default=None, help="Root seed.")(func)
    func = click.option('--config', 'config_path', type=str, default=None,
                        help="TOML scenario file; defaults apply when omitted.")(func)
    return func


def _default_out(*parts) -> str:
    return os.path.join(current_app.config.get('SIM_OUTPUT_DIR', 'results'), *parts)


@sim_cli.command('run')
@config_options
@click.option('--scheme', type=SCHEME_CHOICE, default='proposed', show_default=True)
@click.option('--out', 'out_dir', type=str, default=None, help="Output directory.")
@click.option('--phases/--no-phases', default=False, help="Also dump the phase field.")
@click.option('--landscape/--no-landscape', 'with_landscape', default=False,
              help="Also dump the lambda_max landscape over the uncertainty disk.")
@click.option('--dump-channels', is_flag=True, default=False, help="Also dump every channel entry.")
def run_command(config_path, seed, pairs, scheme, out_dir, phases, with_landscape, dump_channels):
    """Run one scheme and write report, density map and manifest."""
    config = _load(config_path, seed, pairs)
    out_dir = out_dir or _default_out(f"run-{scheme}-seed{config.seed}")
    os.makedirs(out_dir, exist_ok=True)

    report = _run(scheme, config)
    state = report.state
    files = reporting.write_report(report, out_dir)
    files.append(reporting.write_density_map(report, net_marginal_gain(state),
                                             os.path.join(out_dir, "density_map.csv")))
    if phases:
        files.append(reporting.write_phase_dump(state.theta, os.path.join(out_dir, "phases.csv")))
    if with_landscape:
        rows = landscape(state, state.scenario.jammer_estimate[:2], config.epsilon)
        files.append(reporting.write_landscape(rows, os.path.join(out_dir, "landscape.csv")))
    if dump_channels:
        files.append(reporting.write_channel_dump(state.channels, os.path.join(out_dir, "channels.csv")))
    _, content_hash = reporting.write_manifest(out_dir, config, files, extra={"scheme": scheme})
    if current_app.config.get('RUN_RECORDING_ENABLED', False):
        _, err = RunService.record_run(report, content_hash=content_hash)
        if err:
            logger.warning("Run not recorded", code=err.code.value, message=err.message)

    click.echo(f"scheme={scheme} seed={config.seed} sum_rate={report.sum_rate:.6f} "
               f"design_sum_rate={report.design_sum_rate:.6f} iterations={report.iterations} "
               f"converged={report.converged} out={out_dir}")


def _load_sweep(spec_path, parameter, values, schemes, seeds, out_dir) -> SweepSpec:
    raw = {}
    if spec_path:
        try:
            with open(spec_path, 'rb') as handle:
                raw = tomllib.load(handle)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            _fail(ErrorResponseBuilder.unreadable_config(spec_path, str(exc)), EXIT_INVALID_CONFIG)
    try:
        if parameter:
            raw["parameter"] = parameter
        if values:
            raw["values"] = [float(v) for v in values.split(",") if v.strip()]
        if schemes:
            raw["schemes"] = [s.strip() for s in schemes.split(",") if s.strip()]
        if seeds:
            raw["seeds"] = [int(s) for s in seeds.split(",") if s.strip()]
    except ValueError as exc:
        _fail(ErrorResponseBuilder.validation_error(f"Malformed sweep list: {exc}"), EXIT_INVALID_CONFIG)
    if out_dir:
        raw['output_dir'] = out_dir
    try:
        return SweepSpec(**raw)
    except ValidationError as exc:
        _fail(ErrorResponseBuilder.from_field_errors(ErrorResponseBuilder.pydantic_validation_error(exc)),
              EXIT_INVALID_CONFIG)


def _sweep_job(spec: SweepSpec, config_path, base_overrides, scheme, value, seed) -> Dict:
    row = {"scheme": scheme, "param": spec.parameter, "value": value, "seed": seed,
           "sum_rate": float('nan'), "iterations": None, "wallclock": None}
    overrides = merge_raw(base_overrides, {spec.override_key(): spec.override_value(value)})
    config, err = resolve_config(config_path, overrides, seed)
    if err:
        logger.warning("Sweep job invalid", scheme=scheme, value=value, seed=seed, message=err.message)
        return row
    started = time.perf_counter()
    try:
        report = run_scheme(scheme, config)
    except SimulationError as exc:
        logger.warning("Sweep job failed", scheme=scheme, value=value, seed=seed, error=str(exc))
        return row
    except Exception:
        logger.exception("Sweep job crashed", scheme=scheme, value=value, seed=seed)
        return row
    job_dir = os.path.join(spec.output_dir, "jobs", f"{scheme}_{spec.parameter}_{value:g}_seed{seed}")
    os.makedirs(job_dir, exist_ok=True)
    reporting.write_report(report, job_dir)
    row.update(sum_rate=report.sum_rate, iterations=report.iterations,
               wallclock=time.perf_counter() - started)
    return row


@sim_cli.command('sweep')
@click.option('--spec', 'spec_path', type=str, default=None, help="TOML sweep specification.")
@click.option('--param', 'parameter', type=str, default=None, help="Swept parameter.")
@click.option('--values', type=str, default=None, help="Comma-separated values.")
@click.option('--schemes', type=str, default=None, help="Comma-separated schemes.")
@click.option('--seeds', type=str, default=None, help="Comma-separated distinct seeds.")
@click.option('--out', 'out_dir', type=str, default=None, help="Output directory.")
@click.option('--config', 'config_path', type=str, default=None, help="Base TOML scenario file.")
@click.option('--set', 'pairs', multiple=True, metavar='KEY=VALUE', help="Base config override.")
@click.option('--external', type=str, default=None,
              help="CSV of externally produced rows (scheme,param,value,seed,sum_rate) to overlay.")
def sweep_command(spec_path, parameter, values, schemes, seeds, out_dir, config_path, pairs, external):
    """Run the scheme x value x seed grid and write sweep.csv."""
    spec = _load_sweep(spec_path, parameter, values, schemes, seeds, out_dir)
    base_overrides = _overrides(pairs)
    jobs = [(scheme, value, seed) for scheme in spec.schemes for value in spec.values for seed in spec.seeds]
    threads = current_app.config.get('SIM_THREADS', 1)
    logger.info("Sweep started", parameter=spec.parameter, jobs=len(jobs), threads=threads)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(_sweep_job, spec, config_path, base_overrides, *job) for job in jobs]
        rows: List[Dict] = [future.result() for future in futures]

    frame = reporting.sweep_frame(rows)
    if external:
        try:
            frame = reporting.append_external(frame, external)
        except (OSError, ValueError) as exc:
            _fail(ErrorResponseBuilder.unreadable_config(external, str(exc)), EXIT_INVALID_CONFIG)
    path = reporting.write_sweep(frame, os.path.join(spec.output_dir, "sweep.csv"))
    failed = int(frame["sum_rate"].isna().sum())
    click.echo(f"rows={len(frame)} failed={failed} out={path}")


@sim_cli.command('density-map')
@config_options
@click.option('--scheme', type=SCHEME_CHOICE, default='proposed', show_default=True)
@click.option('--out', 'out_path', type=str, default=None, help="Output CSV path.")
def density_map_command(config_path, seed, pairs, scheme, out_path):
    """Converged density and net marginal gain per cell."""
    config = _load(config_path, seed, pairs)
    report = _run(scheme, config)
    out_path = out_path or _default_out(f"density-{scheme}-seed{config.seed}.csv")
    reporting.write_density_map(report, net_marginal_gain(report.state), out_path)
    click.echo(f"cells={report.state.grid.n_cells} out={out_path}")


@sim_cli.command('jammer-landscape')
@config_options
@click.option('--radial', type=click.IntRange(min=1), default=10, show_default=True)
@click.option('--angular', type=click.IntRange(min=1), default=36, show_default=True)
@click.option('--out', 'out_path', type=str, default=None, help="Output CSV path.")
def jammer_landscape_command(config_path, seed, pairs, radial, angular, out_path):
    """lambda_max over the uncertainty disk for the initial swarm configuration."""
    config = _load(config_path, seed, pairs)
    try:
        state = initial_state(config)
    except SimulationError as exc:
        _fail(exc.to_response(), EXIT_RUN_FAILED)
    rows = landscape(state, state.scenario.jammer_estimate[:2], config.epsilon, radial, angular)
    out_path = out_path or _default_out(f"landscape-seed{config.seed}.csv")
    reporting.write_landscape(rows, out_path)
    click.echo(f"points={len(rows)} out={out_path}")


@sim_cli.command('validate')
@config_options
def validate_command(config_path, seed, pairs):
    """Validate a configuration and echo it in linear units."""
    config = _load(config_path, seed, pairs)
    click.echo(json.dumps(config.model_dump(mode='json'), indent=2, sort_keys=True))
    click.echo("valid")


@sim_cli.command('complexity')
@config_options
@click.option('--q', 'q_values', type=float, multiple=True, help="Swarm sizes to time (repeatable).")
@click.option('--grids', is_flag=True, default=False, help="Also time the gain field over three grid sizes.")
def complexity_command(config_path, seed, pairs, q_values, grids):
    """Time DT-ARA over swarm sizes on a fixed grid."""
    config = _load(config_path, seed, pairs)
    q_values = q_values or (100.0, 1000.0)
    try:
        rows = complexity_timing(config, q_values)
        grid_rows = gain_field_timing(config, [(10, 10), (20, 10), (20, 20)]) if grids else []
    except SimulationError as exc:
        _fail(exc.to_response(), EXIT_RUN_FAILED)
    click.echo("q,cells,seconds")
    for row in rows:
        click.echo(f"{row['q']:g},{row['cells']},{row['seconds']:.6e}")
    if grid_rows:
        click.echo("cells,gain_seconds")
        for row in grid_rows:
            click.echo(f"{row['cells']},{row['seconds']:.6e}")
