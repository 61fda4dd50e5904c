"""Experiment configuration schemas.

A config names one model, a master seed and an ordered list of stages. Later
stages may inherit Σ, δ, the last θ and the proposal covariance of the stage
before them (for example an rABC warm-up refined by rsABC).
"""

from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

SamplerId = Literal["pm", "r", "rs", "xrs", "smc", "exchange", "exact", "analytic"]
KernelKind = Literal["gaussian", "indicator"]
Inherit = Literal["inherit"]

ABC_MCMC = ("pm", "r", "rs", "xrs")
MCMC = ABC_MCMC + ("exchange", "analytic")


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelConfig(StrictModel):
    """Model id, constructor options and the data-generating θ."""

    id: Literal["gaussian", "gandk", "ising", "lotka_volterra"]
    options: dict[str, Union[int, float, str, bool, list[int], list[float]]] = Field(default_factory=dict)
    theta_true: list[float]
    observed_file: Optional[Path] = None  # plain-text dataset instead of simulating x*


class PilotConfig(StrictModel):
    n: int = Field(default=5000, ge=2)


class ProposalConfig(StrictModel):
    """Random-walk proposal on the sampling scale.

    Give either ``sd`` (per-coordinate standard deviations) or ``cov``
    (diagonal variances), or ``inherit`` from the previous stage.
    """

    sd: Optional[list[float]] = None
    cov: Optional[list[float]] = None
    inherit: bool = False
    adapt: bool = True
    period: int = Field(default=500, ge=1)


class SMCConfig(StrictModel):
    N: int = Field(default=1000, ge=2)
    gamma: float = Field(default=0.95, gt=0, lt=1)
    E: Optional[float] = None  # defaults to N/2
    stop_rate: float = Field(default=0.01, gt=0, le=1)
    max_iterations: int = Field(default=1000, ge=1)
    snapshots: bool = False


class StageConfig(StrictModel):
    name: str
    sampler: SamplerId
    n_iter: int = Field(default=10_000, ge=1)
    burn_in: int = Field(default=0, ge=0)
    kernel: KernelKind = "gaussian"

    M: int = Field(default=1, ge=1)
    R: int = Field(default=500, ge=1)
    R1: int = Field(default=500, ge=1)
    R2: int = Field(default=500, ge=1)
    delta: Union[float, Inherit, None] = 3e-4
    strata: list[float] = Field(default_factory=lambda: [0.5, 1.0])
    sigma: Union[Literal["identity", "pilot", "inherit"], list[float]] = "identity"

    self_tune: bool = False
    psi: float = Field(default=5.0, gt=0, le=100)
    K_burnin: int = Field(default=0, ge=0)
    check_fraction: float = Field(default=0.05, gt=0, le=1)

    init: Union[list[float], Inherit, None] = None  # natural scale
    proposal: ProposalConfig = Field(default_factory=ProposalConfig)
    smc: SMCConfig = Field(default_factory=SMCConfig)

    @field_validator("delta")
    @classmethod
    def _positive_delta(cls, v):
        if isinstance(v, float) and not v > 0:
            raise ValueError("delta must be positive")
        return v

    @field_validator("strata")
    @classmethod
    def _increasing_strata(cls, v: list[float]) -> list[float]:
        if any(f <= 0 for f in v) or any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("strata fractions must be positive and strictly increasing")
        return v


class SweepConfig(StrictModel):
    """Likelihood-curve sweep over one coordinate of θ (natural scale)."""

    parameter: int = Field(default=0, ge=0)
    low: float = -0.1
    high: float = 0.1
    points: int = Field(default=50, ge=2)
    reps: int = Field(default=1000, ge=2)
    fixed: Optional[list[float]] = None  # values of the other coordinates, defaults to theta_true
    variance_reps: Optional[int] = Field(default=None, ge=2)  # averaged vs single estimator variances at the fixed θ


class BatchConfig(StrictModel):
    replicates: int = Field(default=1, ge=1)
    reference_stage: Optional[str] = None  # posterior the others are compared against


class ExperimentConfig(StrictModel):
    name: str
    seed: int = Field(ge=0)
    output_dir: Optional[Path] = None  # relative paths resolve under Settings.output_root
    model: ModelConfig
    pilot: Optional[PilotConfig] = None
    stages: list[StageConfig] = Field(min_length=1)
    sweep: Optional[SweepConfig] = None
    batch: BatchConfig = Field(default_factory=BatchConfig)

    def stage(self, name: str) -> StageConfig:
        for s in self.stages:
            if s.name == name:
                return s
        raise KeyError(name)
