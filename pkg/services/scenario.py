"""Deployment-region discretization, density fields and scenario geometry.

Every spatial integral over the region D is evaluated as a midpoint sum over
the cells built here: ``sum_c f(center_c) * rho[c] * area[c]``.
"""

import zlib
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from logging_config import get_logger
from schemas.config_schemas import SystemConfig
from schemas.error_schemas import ErrorCode, FieldError
from services.errors import ConfigurationError, GridMismatchError

logger = get_logger(__name__)


@dataclass(frozen=True)
class CellRecord:
    index: int
    center: np.ndarray
    area: float


@dataclass(frozen=True)
class Grid:
    """Uniform rectangular tiling of D, cells ordered row-major (x fastest).

    Attributes:
        centers: (C, 2) cell midpoints in meters, the quadrature nodes.
        areas: (C,) cell areas in square meters.
        dims: Cells per axis (nx, ny).
        region_size: Region extent (width, height) in meters.
    """
    centers: np.ndarray
    areas: np.ndarray
    dims: tuple
    region_size: tuple

    @property
    def n_cells(self) -> int:
        return int(self.areas.shape[0])

    @property
    def total_area(self) -> float:
        return float(self.region_size[0] * self.region_size[1])

    @property
    def cells(self) -> List[CellRecord]:
        return [CellRecord(i, self.centers[i], float(self.areas[i])) for i in range(self.n_cells)]

    def check_field(self, values: np.ndarray, name: str) -> None:
        """Raise GridMismatchError unless ``values`` has one leading entry per cell."""
        if values.shape[0] != self.n_cells:
            raise GridMismatchError(
                f"{name} has {values.shape[0]} cells, grid has {self.n_cells}"
            )


@dataclass(frozen=True)
class DensityField:
    """Mean-field UAV density, one value per cell in UAVs per square meter."""
    rho: np.ndarray

    def integral(self, grid: Grid) -> float:
        grid.check_field(self.rho, "density")
        return float(np.dot(self.rho, grid.areas))

    def violations(self, grid: Grid, q: float, rho_max: float, rel_tol: float = 1e-6) -> List[str]:
        """Invariant violations of this field (empty when valid)."""
        problems = []
        if np.any(self.rho < 0.0):
            problems.append("negative density")
        if np.any(self.rho > rho_max * (1.0 + 1e-12)):
            problems.append(f"density above rho_max={rho_max:g}")
        total = self.integral(grid)
        if abs(total - q) > rel_tol * max(q, 1.0):
            problems.append(f"integral {total:.9g} differs from Q={q:g}")
        return problems

    def scaled(self, factor: float) -> "DensityField":
        return DensityField(self.rho * factor)


@dataclass(frozen=True)
class Scenario:
    """Resolved geometry of one run: grid plus 3-D positions in meters.

    Attributes:
        config: The validated configuration.
        grid: Discretized deployment region.
        bs: (3,) BS position at ground level.
        users: (K, 3) user positions at ground level.
        jammer_estimate: (3,) estimated jammer position at jammer altitude.
        jammer_true: (3,) actual jammer position, if known.
    """
    config: SystemConfig
    grid: Grid
    bs: np.ndarray
    users: np.ndarray
    jammer_estimate: np.ndarray
    jammer_true: Optional[np.ndarray]

    @property
    def cell_positions(self) -> np.ndarray:
        """(C, 3) ARIS positions: cell centers at UAV altitude."""
        altitude = np.full((self.grid.n_cells, 1), self.config.uav_altitude)
        return np.hstack([self.grid.centers, altitude])

    def jammer_position(self, j: np.ndarray) -> np.ndarray:
        """Lift a horizontal jammer coordinate to 3-D."""
        return np.array([j[0], j[1], self.config.geometry.jammer_altitude], dtype=float)


def substream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for a named component ("channel", "users", "phase-init")."""
    sequence = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, int(seed) >> 32, zlib.crc32(name.encode())])
    return np.random.default_rng(sequence)


def build_grid(config: SystemConfig) -> Grid:
    """Tile the region with uniform cells and record their midpoints.

    Args:
        config (SystemConfig): Provides ``region_size`` and ``grid_dims``.

    Returns:
        Grid: Row-major cells; independent of the seed.
    """
    width, height = config.region_size
    nx, ny = config.grid_dims
    dx, dy = width / nx, height / ny
    xs = (np.arange(nx) + 0.5) * dx
    ys = (np.arange(ny) + 0.5) * dy
    gx, gy = np.meshgrid(xs, ys, indexing='xy')
    centers = np.column_stack([gx.ravel(), gy.ravel()])
    areas = np.full(nx * ny, dx * dy)
    return Grid(centers=centers, areas=areas, dims=(nx, ny), region_size=(width, height))


def uniform_density(grid: Grid, q: float, rho_max: float) -> DensityField:
    """Spread the budget evenly over the region.

    Raises:
        ConfigurationError: ``q`` exceeds ``rho_max`` times the region area.
    """
    capacity = rho_max * grid.total_area
    if q > capacity * (1.0 + 1e-12):
        raise ConfigurationError(
            f"Q exceeds density capacity {capacity:g}",
            [FieldError(field='q_uavs', message=f"Q exceeds density capacity {capacity:g}",
                        code=ErrorCode.BUDGET_INFEASIBLE, value=q)],
        )
    level = min(q / grid.total_area, rho_max)
    return DensityField(np.full(grid.n_cells, level))


def _draw_users(config: SystemConfig) -> np.ndarray:
    geometry = config.geometry
    if geometry.user_positions is not None:
        xy = np.asarray(geometry.user_positions, dtype=float)
    else:
        rng = substream(config.seed, "users")
        radius = geometry.user_radius * np.sqrt(rng.uniform(0.0, 1.0, config.k_users))
        angle = rng.uniform(0.0, 2.0 * np.pi, config.k_users)
        cx, cy = geometry.user_center
        xy = np.column_stack([cx + radius * np.cos(angle), cy + radius * np.sin(angle)])
    return np.hstack([xy, np.zeros((xy.shape[0], 1))])


def build_scenario(config: SystemConfig) -> Scenario:
    """Resolve grid, BS, users and jammer positions for a validated config."""
    grid = build_grid(config)
    geometry = config.geometry
    bs = np.array([geometry.bs_position[0], geometry.bs_position[1], 0.0])
    users = _draw_users(config)
    jammer_estimate = np.array([*geometry.jammer_estimate, geometry.jammer_altitude], dtype=float)
    jammer_true = None
    if geometry.jammer_true is not None:
        jammer_true = np.array([*geometry.jammer_true, geometry.jammer_altitude], dtype=float)

    logger.debug("Scenario built", cells=grid.n_cells, users=users[:, :2].round(2).tolist(),
                 jammer_estimate=list(geometry.jammer_estimate))
    return Scenario(config=config, grid=grid, bs=bs, users=users,
                    jammer_estimate=jammer_estimate, jammer_true=jammer_true)
