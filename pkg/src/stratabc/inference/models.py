"""Domain types shared by the estimators, samplers and diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from stratabc.exceptions import DimensionError, ParameterError


@dataclass(frozen=True)
class ScalingMatrix:
    """Diagonal scaling matrix Σ for summary distances, stored as its diagonal."""

    diag: np.ndarray

    def __post_init__(self) -> None:
        diag = np.atleast_1d(np.asarray(self.diag, dtype=float))
        if diag.ndim != 1:
            raise DimensionError(f"Σ diagonal must be a vector, got shape {diag.shape}")
        if not np.all(np.isfinite(diag)) or np.any(diag <= 0):
            raise ParameterError("Σ diagonal entries must be finite and strictly positive")
        object.__setattr__(self, "diag", diag)

    @classmethod
    def identity(cls, n_s: int) -> "ScalingMatrix":
        return cls(np.ones(n_s))

    @property
    def n_s(self) -> int:
        return self.diag.shape[0]

    def to_list(self) -> list[float]:
        return [float(v) for v in self.diag]


@dataclass(frozen=True)
class StrataSpec:
    """Ordered breakpoints b_1 < ... < b_{J-1} on the scaled-distance axis.

    Stratum j covers (b_{j-1}, b_j] with b_0 = 0 (0 included) and b_J = inf.
    A distance equal to a breakpoint b_j therefore belongs to stratum j, the
    lower of the two strata meeting there. An empty breakpoint tuple is the
    single-stratum spec.
    """

    breakpoints: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        bps = tuple(float(b) for b in self.breakpoints)
        arr = np.asarray(bps, dtype=float)
        if arr.size and (not np.all(np.isfinite(arr)) or np.any(arr <= 0)):
            raise ParameterError("strata breakpoints must be finite and positive")
        if arr.size > 1 and np.any(np.diff(arr) <= 0):
            raise ParameterError("strata breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bps)

    @classmethod
    def three_strata(cls, delta: float) -> "StrataSpec":
        """Default strata [0, δ/2], (δ/2, δ], (δ, ∞)."""
        return cls((delta / 2.0, delta))

    @classmethod
    def relative(cls, fractions: list[float] | tuple[float, ...], delta: float) -> "StrataSpec":
        """Breakpoints given as fractions of δ, e.g. (0.5, 1.0)."""
        return cls(tuple(f * delta for f in fractions))

    @property
    def J(self) -> int:
        return len(self.breakpoints) + 1

    def assign(self, distances: np.ndarray) -> np.ndarray:
        """Stratum label (0-based) of every distance; ties go to the lower stratum."""
        d = np.asarray(distances, dtype=float)
        return np.searchsorted(np.asarray(self.breakpoints, dtype=float), d, side="left")


@dataclass
class StrataEstimate:
    """Training probabilities and testing counts/kernel sums for one θ."""

    omega_hat: np.ndarray
    n: np.ndarray
    kernel_sums: np.ndarray


@dataclass(frozen=True)
class LikelihoodEstimate:
    """A nonnegative ABC likelihood estimate and its logarithm.

    ``log_value`` is computed directly in log space and stays finite where
    ``value`` underflows to 0; it is -inf exactly when the estimate is zero.
    """

    value: float
    neglected_stratum: bool = False
    log_value: float = field(default=float("nan"))

    def __post_init__(self) -> None:
        if np.isnan(self.log_value):
            object.__setattr__(
                self, "log_value", float(np.log(self.value)) if self.value > 0 else float("-inf")
            )
        if self.neglected_stratum and self.value != 0.0:
            raise ParameterError("a neglected stratum forces a zero likelihood")

    @classmethod
    def rejected(cls) -> "LikelihoodEstimate":
        return cls(value=0.0, neglected_stratum=True, log_value=float("-inf"))

    @property
    def positive(self) -> bool:
        return self.log_value > float("-inf")


@dataclass
class ThresholdSchedule:
    """Self-tuned ABC threshold: current δ_t plus its history.

    The history is non-increasing from ``rebased_at`` on. A rebase restarts it
    when the distance scale changes (new Σ).
    """

    delta: float
    psi: float = 5.0
    check_period: int = 1
    history: list[tuple[int, float]] = field(default_factory=list)
    pending_check: bool = False
    rebased_at: int = 0

    def __post_init__(self) -> None:
        if not self.delta > 0:
            raise ParameterError(f"threshold must be positive, got {self.delta}")
        if not 0 < self.psi <= 100:
            raise ParameterError(f"psi must be a percentile in (0, 100], got {self.psi}")
        if self.check_period < 1:
            raise ParameterError("check period must be a positive integer")
        if not self.history:
            self.history.append((0, float(self.delta)))

    def record(self, iteration: int, delta: float) -> None:
        if delta > self.delta:
            raise ParameterError("threshold schedule must be non-increasing")
        self.delta = float(delta)
        self.history.append((iteration, self.delta))

    def rebase(self, iteration: int, delta: float) -> None:
        if not delta > 0:
            raise ParameterError(f"threshold must be positive, got {delta}")
        self.delta = float(delta)
        self.rebased_at = iteration
        self.pending_check = False
        self.history.append((iteration, self.delta))

    def current_segment(self) -> list[tuple[int, float]]:
        """History entries since the last rebase."""
        return [(t, d) for t, d in self.history if t >= self.rebased_at]

    def is_check_iteration(self, iteration: int) -> bool:
        return iteration > 0 and iteration % self.check_period == 0


@dataclass
class ProposalState:
    """Gaussian random-walk proposal with optional Haario-style adaptation."""

    covariance: np.ndarray
    adapt: bool = True
    adapt_period: int = 500
    jitter: float = 1e-10
    start_adapting: int = 0

    def __post_init__(self) -> None:
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if cov.shape[0] != cov.shape[1]:
            raise DimensionError(f"proposal covariance must be square, got {cov.shape}")
        self.covariance = cov

    @property
    def p(self) -> int:
        return self.covariance.shape[0]


@dataclass
class Chain:
    """MCMC trace with per-iteration metadata.

    ``phi`` holds the parameter on the sampling scale (log coordinates where
    the model samples on log scale); ``theta`` the natural-scale values.
    """

    phi: np.ndarray
    theta: np.ndarray
    log_likelihood: np.ndarray
    accepted: np.ndarray
    delta: np.ndarray
    strata_counts: Optional[np.ndarray] = None
    evaluated: Optional[np.ndarray] = None
    parameter_names: tuple[str, ...] = ()
    sampler: str = ""
    burn_in: int = 0
    sigma: Optional[ScalingMatrix] = None
    schedule: Optional[ThresholdSchedule] = None
    proposal: Optional[ProposalState] = None
    wall_time: float = 0.0

    def __len__(self) -> int:
        return self.phi.shape[0]

    @property
    def acceptance_rate(self) -> float:
        if len(self) == 0:
            return 0.0
        return float(np.mean(self.accepted))

    @property
    def evaluated_acceptance_rate(self) -> Optional[float]:
        """Acceptance among proposals that reached the MH test.

        Proposals outside the prior support or with a neglected stratum are
        rejected before the test and do not count.
        """
        if self.evaluated is None:
            return None
        n = int(np.count_nonzero(self.evaluated))
        if n == 0:
            return 0.0
        return float(np.count_nonzero(self.accepted & self.evaluated)) / n

    def retained(self) -> np.ndarray:
        """Natural-scale draws after the burn-in."""
        return self.theta[self.burn_in :]

    @property
    def last_phi(self) -> np.ndarray:
        return self.phi[-1].copy()


@dataclass
class ParticlePopulation:
    """Weighted SMC particle set at iteration ``iteration`` with threshold ``delta``."""

    phi: np.ndarray
    theta: np.ndarray
    summaries: np.ndarray
    distances: np.ndarray
    log_weights: np.ndarray
    delta: float
    iteration: int = 0

    @property
    def N(self) -> int:
        return self.phi.shape[0]

    @property
    def weights(self) -> np.ndarray:
        """Normalized weights W^(i)."""
        lw = self.log_weights
        finite = np.isfinite(lw)
        if not np.any(finite):
            return np.zeros_like(lw)
        w = np.zeros_like(lw)
        w[finite] = np.exp(lw[finite] - np.max(lw[finite]))
        return w / np.sum(w)

    def copy(self) -> "ParticlePopulation":
        return ParticlePopulation(
            phi=self.phi.copy(),
            theta=self.theta.copy(),
            summaries=self.summaries.copy(),
            distances=self.distances.copy(),
            log_weights=self.log_weights.copy(),
            delta=self.delta,
            iteration=self.iteration,
        )
