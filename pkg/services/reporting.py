"""CSV and manifest writers for runs and sweeps.

Header rows are part of the file contract; ``SCHEMA_VERSION`` is bumped
whenever a column is added, renamed or reordered. Data files hold no
wall-clock values so identical (config, seed) runs write identical bytes;
timings go to ``timings.json`` which the manifest does not hash.
"""

import hashlib
import json
import os
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from logging_config import get_logger
from schemas.config_schemas import SystemConfig
from services.channel import ChannelSet

logger = get_logger(__name__)

SCHEMA_VERSION = 1

REPORT_COLUMNS = ["kind", "iteration", "sum_rate", "design_sum_rate", "worst_case_sum_rate",
                  "converged", "jammer_x", "jammer_y"]
USER_COLUMNS = ["user", "gamma", "rate"]
DENSITY_COLUMNS = ["x", "y", "rho", "gain"]
PHASE_COLUMNS = ["cell", "element", "re", "im"]
LANDSCAPE_COLUMNS = ["j_x", "j_y", "lambda"]
CHANNEL_COLUMNS = ["cell", "role", "row", "col", "re", "im"]
SWEEP_COLUMNS = ["scheme", "param", "value", "seed", "sum_rate", "iterations", "wallclock"]
EXTERNAL_COLUMNS = ["scheme", "param", "value", "seed", "sum_rate"]


def git_blob_hash(content: bytes) -> str:
    """SHA-1 of ``blob <len>\\0<content>``, as git hashes file contents."""
    header = f"blob {len(content)}\0".encode()
    return hashlib.sha1(header + content).hexdigest()


def _write_frame(frame: pd.DataFrame, path: str, comments: Iterable[str] = ()) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as handle:
        for line in comments:
            handle.write(f"# {line}\n")
        frame.to_csv(handle, index=False, lineterminator="\n")
    return path


def report_frame(report) -> pd.DataFrame:
    """One row per outer iteration (``trace[0]`` is iteration 0) plus a summary row."""
    rows = [{"kind": "iteration", "iteration": t, "sum_rate": value}
            for t, value in enumerate(report.trace)]
    jammer = report.worst_case_jammer.position
    rows.append({
        "kind": "summary",
        "iteration": report.iterations,
        "sum_rate": report.sum_rate,
        "design_sum_rate": report.design_sum_rate,
        "worst_case_sum_rate": report.worst_case_sum_rate,
        "converged": report.converged,
        "jammer_x": float(jammer[0]),
        "jammer_y": float(jammer[1]),
    })
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def write_report(report, out_dir: str) -> List[str]:
    """report.csv, users.csv and timings.json under ``out_dir``."""
    paths = [_write_frame(report_frame(report), os.path.join(out_dir, "report.csv"))]
    users = pd.DataFrame({"user": np.arange(report.gamma.size), "gamma": report.gamma,
                          "rate": report.rates}, columns=USER_COLUMNS)
    paths.append(_write_frame(users, os.path.join(out_dir, "users.csv")))
    with open(os.path.join(out_dir, "timings.json"), "w") as handle:
        json.dump({"stage_seconds": report.stage_seconds}, handle, indent=2, sort_keys=True)
    return paths


def _point(values) -> str:
    return "none" if values is None else f"{float(values[0]):.6f},{float(values[1]):.6f}"


def write_density_map(report, gain, path: str) -> str:
    """Per-cell density and net marginal gain; jammer coordinates go in header comments."""
    state = report.state
    centers = state.grid.centers
    frame = pd.DataFrame({"x": centers[:, 0], "y": centers[:, 1], "rho": state.rho.rho, "gain": gain.g},
                         columns=DENSITY_COLUMNS)
    scenario = state.scenario
    true = scenario.jammer_true[:2] if scenario.jammer_true is not None else None
    comments = [
        f"schema=density_map/{SCHEMA_VERSION}",
        f"jammer_estimate={_point(scenario.jammer_estimate[:2])}",
        f"jammer_true={_point(true)}",
        f"jammer_design={_point(state.jammer.position)}",
        f"jammer_optimized={_point(report.worst_case_jammer.position)}",
    ]
    return _write_frame(frame, path, comments)


def write_phase_dump(theta, path: str) -> str:
    values = np.asarray(getattr(theta, "theta", theta))
    cells, elements = np.indices(values.shape)
    frame = pd.DataFrame({"cell": cells.ravel(), "element": elements.ravel(),
                          "re": values.real.ravel(), "im": values.imag.ravel()}, columns=PHASE_COLUMNS)
    return _write_frame(frame, path)


def write_landscape(rows, path: str) -> str:
    return _write_frame(pd.DataFrame(list(rows), columns=LANDSCAPE_COLUMNS), path)


def write_channel_dump(channels: ChannelSet, path: str) -> str:
    """Every channel entry: role ``bu`` rows are RIS elements, ``uk`` rows are users."""
    frames = []
    for role, array in (("bu", channels.h_bu), ("uk", channels.h_uk)):
        cell, row, col = np.indices(array.shape)
        frames.append(pd.DataFrame({"cell": cell.ravel(), "role": role, "row": row.ravel(),
                                    "col": col.ravel(), "re": array.real.ravel(),
                                    "im": array.imag.ravel()}, columns=CHANNEL_COLUMNS))
    frame = pd.concat(frames, ignore_index=True).sort_values(["cell", "role"], kind="stable")
    return _write_frame(frame, path)


def write_manifest(out_dir: str, config: SystemConfig, files: Iterable[str],
                   extra: Optional[Dict] = None) -> Tuple[str, str]:
    """Write manifest.json: config echo, per-file blob hashes and a combined content hash.

    Returns:
        tuple: ``(path, content_hash)``.
    """
    hashes = {}
    for path in sorted(files):
        with open(path, "rb") as handle:
            hashes[os.path.basename(path)] = git_blob_hash(handle.read())
    combined = git_blob_hash("\n".join(f"{name} {digest}" for name, digest in hashes.items()).encode())
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "config": config.model_dump(mode="json"),
        "files": hashes,
        "content_hash": combined,
    }
    if extra:
        manifest.update(extra)
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
    logger.debug("Manifest written", path=path, content_hash=combined)
    return path, combined


def sweep_frame(rows: Iterable[Dict]) -> pd.DataFrame:
    return pd.DataFrame(list(rows), columns=SWEEP_COLUMNS)


def append_external(frame: pd.DataFrame, path: str) -> pd.DataFrame:
    """Overlay externally supplied rows (scheme,param,value,seed,sum_rate)."""
    external = pd.read_csv(path, comment="#")
    missing = [column for column in EXTERNAL_COLUMNS if column not in external.columns]
    if missing:
        raise ValueError(f"external rows lack columns: {', '.join(missing)}")
    external = external[EXTERNAL_COLUMNS].reindex(columns=SWEEP_COLUMNS)
    return pd.concat([frame, external], ignore_index=True)


def write_sweep(frame: pd.DataFrame, path: str) -> str:
    return _write_frame(frame, path)


def mean_by(frame: pd.DataFrame) -> pd.DataFrame:
    """Mean sum-rate per (scheme, value), failed rows excluded."""
    valid = frame.dropna(subset=["sum_rate"])
    return valid.groupby(["scheme", "value"], sort=True)["sum_rate"].mean().reset_index()
