"""Scenario configuration: system scalars, geometry and solver knobs.

``SystemConfig`` is the single source of truth for one run. All powers and
gains are stored in linear units (watts, linear ratios); the loader converts
``*_dbm`` / ``*_db`` keys exactly once.
"""

import math
import tomllib
from typing import Annotated, Any, Dict, List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError, model_validator

from schemas.error_schemas import ErrorCode, ErrorResponse, ErrorResponseBuilder, FieldError


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts * 1000.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


Coordinate = Annotated[float, Field(allow_inf_nan=False)]


class GeometryConfig(BaseModel):
    """Scenario geometry in meters.

    The BS sits on the west edge, the users are drawn in a disk east of the
    region centre and the jammer estimate lies south of it. Users and the
    jammer are at ground level unless overridden.

    Attributes:
        bs_position: Horizontal BS coordinate (ground level).
        user_center: Centre of the disk users are drawn from.
        user_radius: Radius of that disk.
        user_positions: Explicit user coordinates; overrides the random draw.
        jammer_estimate: Estimated jammer position (centre of the uncertainty disk).
        jammer_altitude: Jammer height above ground.
        jammer_true: Actual jammer position, reported in density maps only.
        element_spacing: ULA element spacing in wavelengths (BS, RIS and jammer).
    """
    model_config = ConfigDict(frozen=True, extra='forbid')

    bs_position: Tuple[Coordinate, Coordinate] = (0.0, 100.0)
    user_center: Tuple[Coordinate, Coordinate] = (140.0, 100.0)
    user_radius: float = Field(40.0, ge=0)
    user_positions: Optional[List[Tuple[Coordinate, Coordinate]]] = None
    jammer_estimate: Tuple[Coordinate, Coordinate] = (100.0, 40.0)
    jammer_altitude: float = Field(0.0, ge=0)
    jammer_true: Optional[Tuple[Coordinate, Coordinate]] = None
    element_spacing: PositiveFloat = 0.5


class SolverConfig(BaseModel):
    """Iteration limits, step rules and tolerances of the four solvers."""
    model_config = ConfigDict(frozen=True, extra='forbid')

    eps_conv: PositiveFloat = 1e-3
    t_max: int = Field(20, ge=0)

    ris_max_iterations: PositiveInt = 200
    ris_initial_step: PositiveFloat = 1.0
    ris_backtrack: float = Field(0.5, gt=0, lt=1)
    ris_max_halvings: PositiveInt = 30
    ris_tol: PositiveFloat = 1e-3
    ris_improvement_tol: float = Field(1e-6, ge=0)
    ris_armijo: float = Field(1e-4, gt=0, lt=1)
    ris_abs_tol: float = Field(1e-10, ge=0)

    jammer_fd_step: PositiveFloat = 0.01
    jammer_step: PositiveFloat = 0.5
    jammer_min_step: PositiveFloat = 1e-3
    jammer_max_steps: PositiveInt = 100
    jammer_boundary_scan: int = Field(16, ge=0)

    dt_ara_tol: PositiveFloat = 1e-10
    dt_ara_method: Literal["sort", "bisection"] = "sort"
    density_damping: bool = True

    evaluation: Literal["worst_case", "design"] = "worst_case"


class SystemConfig(BaseModel):
    """All scalars of one scenario, in linear units.

    Attributes:
        m_antennas: BS antenna count M.
        n_elements: RIS elements per UAV N.
        q_uavs: Swarm size Q, a real-valued budget.
        k_users: Single-antenna user count K.
        l_antennas: Jammer antenna count L.
        region_size: Deployment region D, meters per axis.
        grid_dims: Cells per axis used to discretize D.
        uav_altitude: Fixed UAV altitude in meters.
        alpha: Path-loss exponent.
        beta: Reference channel gain at 1 m (linear).
        kappa: Rician K-factor (linear).
        p_bs: BS power budget in watts.
        p_jam: Jamming power in watts.
        epsilon: Jammer position uncertainty radius in meters.
        rho_max: Maximum density in UAVs per square meter.
        noise_power: Per-user noise power in watts.
        seed: Root seed for every random substream.
    """
    model_config = ConfigDict(frozen=True, extra='forbid')

    m_antennas: PositiveInt = 16
    n_elements: PositiveInt = 50
    q_uavs: float = Field(100.0, ge=0, allow_inf_nan=False)
    k_users: PositiveInt = 4
    l_antennas: PositiveInt = 16
    region_size: Tuple[PositiveFloat, PositiveFloat] = (200.0, 200.0)
    grid_dims: Tuple[PositiveInt, PositiveInt] = (20, 20)
    uav_altitude: PositiveFloat = 100.0
    alpha: PositiveFloat = 2.2
    beta: PositiveFloat = 1e-3
    kappa: PositiveFloat = 10.0
    p_bs: PositiveFloat = Field(default_factory=lambda: dbm_to_watts(40.0))
    p_jam: PositiveFloat = Field(default_factory=lambda: dbm_to_watts(50.0))
    epsilon: float = Field(30.0, ge=0, allow_inf_nan=False)
    rho_max: PositiveFloat = 0.05
    noise_power: PositiveFloat = Field(default_factory=lambda: dbm_to_watts(-102.0))
    seed: int = Field(0, ge=0, lt=2 ** 64)

    geometry: GeometryConfig = GeometryConfig()
    solver: SolverConfig = SolverConfig()

    @property
    def area(self) -> float:
        return self.region_size[0] * self.region_size[1]

    @property
    def density_capacity(self) -> float:
        return self.rho_max * self.area

    def with_overrides(self, **changes) -> "SystemConfig":
        """Return a copy with top-level fields replaced (no re-validation)."""
        return self.model_copy(update=changes)


# Unit-suffixed keys accepted by the loader and the linear field they set.
_UNIT_KEYS = {
    'p_bs_dbm': ('p_bs', dbm_to_watts),
    'p_jam_dbm': ('p_jam', dbm_to_watts),
    'noise_dbm': ('noise_power', dbm_to_watts),
    'beta_db': ('beta', db_to_linear),
    'kappa_db': ('kappa', db_to_linear),
}
_ALIASES = {linear: unit for unit, (linear, _) in _UNIT_KEYS.items()}


def _cross_field_errors(raw: Dict[str, Any]) -> List[FieldError]:
    """Invariants spanning several fields, checked on whatever parses."""
    defaults = SystemConfig()
    errors = []

    def value(name):
        v = raw.get(name, getattr(defaults, name))
        return v

    try:
        k, m = int(value('k_users')), int(value('m_antennas'))
        if k > m:
            errors.append(FieldError(
                field='k_users',
                message=f"K exceeds M ({k} > {m}); zero-forcing needs K <= M",
                code=ErrorCode.ZF_INFEASIBLE,
                value=k,
            ))
    except (TypeError, ValueError):
        pass

    try:
        size = value('region_size')
        capacity = float(value('rho_max')) * float(size[0]) * float(size[1])
        q = float(value('q_uavs'))
        if q > capacity * (1.0 + 1e-12):
            errors.append(FieldError(
                field='q_uavs',
                message=f"Q exceeds density capacity {capacity:g}",
                code=ErrorCode.BUDGET_INFEASIBLE,
                value=q,
            ))
    except (TypeError, ValueError, IndexError):
        pass

    try:
        geometry = raw.get('geometry') or {}
        if isinstance(geometry, GeometryConfig):
            geometry = geometry.model_dump()
        positions = geometry.get('user_positions')
        k = int(value('k_users'))
        if positions is not None and len(positions) != k:
            errors.append(FieldError(
                field='geometry.user_positions',
                message=f"{len(positions)} user positions given for K={k}",
                code=ErrorCode.VALIDATION_ERROR,
                value=len(positions),
            ))
    except (TypeError, ValueError, AttributeError):
        pass

    return errors


def validate_config(raw) -> Tuple[Optional[SystemConfig], Optional[ErrorResponse]]:
    """Validate a raw mapping (or an existing config) against every invariant.

    All violations are collected before returning, never first-failure.

    Args:
        raw: Mapping of SystemConfig fields, or a SystemConfig.

    Returns:
        tuple: ``(SystemConfig, None)`` when valid, ``(None, ErrorResponse)`` otherwise.
    """
    if isinstance(raw, SystemConfig):
        raw = raw.model_dump()
    raw = dict(raw)

    field_errors = []
    parsed = None
    try:
        parsed = SystemConfig.model_validate(raw)
    except ValidationError as exc:
        field_errors.extend(ErrorResponseBuilder.pydantic_validation_error(exc))

    field_errors.extend(_cross_field_errors(raw))
    if field_errors:
        return None, ErrorResponseBuilder.from_field_errors(field_errors)
    return parsed, None


def _parse_scalar(text: str) -> Any:
    try:
        return tomllib.loads(f"v = {text}")['v']
    except tomllib.TOMLDecodeError:
        return text


def _set_dotted(target: Dict[str, Any], dotted: str, value: Any) -> None:
    *parents, leaf = dotted.split('.')
    node = target
    for key in parents:
        node = node.setdefault(key, {})
    node[leaf] = value
    if not parents:
        # An explicit linear value cancels a unit-suffixed one and vice versa.
        if leaf in _ALIASES:
            node.pop(_ALIASES[leaf], None)
        elif leaf in _UNIT_KEYS:
            node.pop(_UNIT_KEYS[leaf][0], None)


def parse_overrides(pairs: Sequence[str]) -> Dict[str, Any]:
    """Turn ``key=value`` strings into a nested mapping.

    Values use TOML scalar syntax (``3``, ``1e-3``, ``[1, 2]``, ``true``);
    anything that does not parse stays a string.
    """
    result: Dict[str, Any] = {}
    for pair in pairs:
        if '=' not in pair:
            raise ValueError(f"Override '{pair}' is not of the form key=value")
        key, text = pair.split('=', 1)
        _set_dotted(result, key.strip(), _parse_scalar(text.strip()))
    return result


def merge_raw(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Deep-merge overrides into a raw config mapping (overrides win)."""
    merged = {k: (dict(v) if isinstance(v, dict) else v) for k, v in base.items()}
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_raw(merged[key], value)
        else:
            _set_dotted(merged, key, value)
    return merged


def convert_units(raw: Dict[str, Any]) -> Dict[str, Any]:
    """Replace ``*_dbm`` / ``*_db`` keys by their linear counterparts."""
    converted = dict(raw)
    for unit_key, (linear_key, convert) in _UNIT_KEYS.items():
        if unit_key in converted:
            converted[linear_key] = convert(float(converted.pop(unit_key)))
    return converted


def load_raw_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Read a TOML config file, apply overrides and convert units once.

    Args:
        path (str, optional): TOML file; built-in defaults apply when omitted.
        overrides (dict, optional): Nested overrides from the CLI or API.

    Returns:
        dict: Raw mapping ready for ``validate_config``.

    Raises:
        OSError: The file cannot be read.
        tomllib.TOMLDecodeError: The file is not valid TOML.
    """
    raw: Dict[str, Any] = {}
    if path:
        with open(path, 'rb') as handle:
            raw = tomllib.load(handle)
    if overrides:
        raw = merge_raw(raw, overrides)
    return convert_units(raw)


class SweepSpec(BaseModel):
    """One figure-style sweep: a parameter, its values, schemes and seeds.

    Attributes:
        parameter: Swept parameter; ``p_jam`` values are in dBm.
        values: Values of the swept parameter.
        schemes: Schemes to run at each value.
        seeds: Distinct seeds to average over.
        output_dir: Directory receiving per-job files and the aggregate CSV.
    """
    model_config = ConfigDict(frozen=True, extra='forbid')

    parameter: Literal["p_jam", "epsilon", "n_elements", "q_uavs", "rho_max"]
    values: List[float] = Field(min_length=1)
    schemes: List[Literal["proposed", "s1", "s2", "s3"]] = Field(default_factory=lambda: ["proposed"], min_length=1)
    seeds: List[int] = Field(default_factory=lambda: [0], min_length=1)
    output_dir: str = "results/sweep"

    @model_validator(mode='after')
    def _distinct_seeds(self) -> "SweepSpec":
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        return self

    def override_key(self) -> str:
        """Raw-config key the swept value is written to."""
        return {"p_jam": "p_jam_dbm"}.get(self.parameter, self.parameter)

    def override_value(self, value: float):
        return int(round(value)) if self.parameter == "n_elements" else float(value)


def resolve_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None,
                   seed: Optional[int] = None) -> Tuple[Optional[SystemConfig], Optional[ErrorResponse]]:
    """Load, override and validate in one step, as the CLI and the API do.

    Args:
        path (str, optional): TOML file.
        overrides (dict, optional): Nested raw overrides.
        seed (int, optional): Seed flag; wins over file and overrides.

    Returns:
        tuple: ``(SystemConfig, None)`` or ``(None, ErrorResponse)``.
    """
    try:
        raw = load_raw_config(path, overrides)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        return None, ErrorResponseBuilder.unreadable_config(str(path), str(exc))
    except (TypeError, ValueError) as exc:
        return None, ErrorResponseBuilder.validation_error(str(exc))
    if seed is not None:
        raw['seed'] = seed
    return validate_config(raw)
