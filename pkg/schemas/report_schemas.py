from datetime import datetime
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field


class RunCreateSchema(BaseModel):
    """Request body for starting a run through the API.

    Attributes:
        scheme (str): Benchmark scheme to run.
        seed (int): Root seed; overrides any seed in ``overrides``.
        overrides (dict): Raw configuration keys, same syntax as the TOML file
            (nested ``geometry`` / ``solver`` sections, ``*_dbm`` keys allowed).
    """
    model_config = ConfigDict(extra='forbid')

    scheme: Literal["proposed", "s1", "s2", "s3"] = "proposed"
    seed: int = Field(0, ge=0, lt=2 ** 63)
    overrides: Dict[str, Any] = Field(default_factory=dict)


class RunSummarySchema(BaseModel):
    """Stored run as returned by the API."""
    id: int
    created_at: Optional[datetime] = None
    scheme: str
    seed: int
    sum_rate: float
    worst_case_sum_rate: float
    iterations: int
    converged: bool
    content_hash: Optional[str] = None

    model_config = ConfigDict(from_attributes=True)


class RunListResponseSchema(BaseModel):
    runs: List[RunSummarySchema]


class IterationSchema(BaseModel):
    iteration: int
    sum_rate: float

    model_config = ConfigDict(from_attributes=True)


class TraceResponseSchema(BaseModel):
    """Per-iteration sum-rate trace of one stored run."""
    run_id: int
    trace: List[IterationSchema]
