"""Pydantic request/response models for the REST surface."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class RunRequest(BaseModel):
    """Run a scenario: either a built-in name or a full scenario document."""

    name: Optional[str] = None
    scenario: Optional[dict] = None
    window_s: float = 5.0


class TraceSummaryModel(BaseModel):
    steps: int
    max_force: float
    mean_force: float
    integral_abs_force: float
    mean_u_dev: float
    mean_force_vel_inner: float
    frac_force_opposing_vel: float
    min_h: float
    max_tank: float
    min_ledger_margin: float
    beta_extra: float
    fallback_steps: int


class RunResponse(BaseModel):
    name: str
    trace_csv: str
    sidecar: dict
    summary: TraceSummaryModel


class CompareRequest(BaseModel):
    trace_csv_a: str
    trace_csv_b: str
    window_s: float = 5.0


class CompareResponse(BaseModel):
    a: TraceSummaryModel
    b: TraceSummaryModel
    trajectory_dev_max: float
    trajectory_dev_mean: float
    envelope_a: list[float]
    envelope_b: list[float]
    window_s: float


class SweepRequest(BaseModel):
    name: Optional[str] = None
    scenario: Optional[dict] = None
    param: str
    values: list[float]


class SweepResponse(BaseModel):
    param: str
    summaries: dict[str, TraceSummaryModel]


class OracleCheckRequest(BaseModel):
    n: int = Field(default=200, ge=1, le=5000)
    seed: int = 7


class OracleCheckResponse(BaseModel):
    instances: int
    max_cost_gap: float
    max_point_dist: float
    max_kkt_residual: float
    ok: bool


class ScenarioListResponse(BaseModel):
    builtin: list[str]


class HealthResponse(BaseModel):
    status: str
    version: str
