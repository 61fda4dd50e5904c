"""Schemas for run artifacts: chain diagnostics, posterior summaries and the run manifest."""

from datetime import datetime
from typing import Optional

from pydantic import BaseModel, Field


class PosteriorSummary(BaseModel):
    """Mean and nearest-rank 95% interval of one coordinate."""

    name: str
    mean: float
    lower: float
    upper: float


class ChainDiagnostics(BaseModel):
    """Mixing and efficiency metrics of one chain (post burn-in)."""

    parameter_names: list[str] = Field(default_factory=list)
    iat: list[float] = Field(default_factory=list)
    ess: list[float] = Field(default_factory=list)
    worst_iat: float = 1.0
    worst_ess: float = 0.0
    acceptance_rate: float = 0.0
    evaluated_acceptance_rate: Optional[float] = None  # among proposals that reached the MH test
    wall_time: float = 0.0  # seconds spent in the sampling loop
    ess_per_minute: Optional[float] = None
    n_retained: int = 0
    posterior: list[PosteriorSummary] = Field(default_factory=list)
    final_delta: Optional[float] = None
    sigma: Optional[list[float]] = None


class SMCDiagnostics(BaseModel):
    """Terminal-population summary of an ABC-SMC stage."""

    iterations: int
    final_delta: float
    ess: float
    last_acceptance_rate: Optional[float] = None
    wall_time: float = 0.0
    posterior: list[PosteriorSummary] = Field(default_factory=list)


class StageManifest(BaseModel):
    name: str
    sampler: str
    n_iter: int
    files: list[str] = Field(default_factory=list)
    diagnostics: Optional[ChainDiagnostics] = None
    smc: Optional[SMCDiagnostics] = None
    handoff_delta: Optional[float] = None
    handoff_sigma: Optional[list[float]] = None


class RunManifest(BaseModel):
    """Everything needed to identify and re-run an experiment."""

    experiment: str
    model: str
    seed: int
    code_version: str
    created_at: datetime
    output_dir: str
    stages: list[StageManifest] = Field(default_factory=list)
