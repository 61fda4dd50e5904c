"""Shared pieces of the benchmark simulators: priors, the simulator contract
and the observed-data bundle handed to the samplers."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from stratabc.exceptions import DimensionError, ParameterError
from stratabc.inference.resampling import BlockScheme
from stratabc.streams import RandomStream

# A dataset is a plain array; its layout is fixed by the owning simulator:
# scalar sample (n_obs,), paired series (n_obs, 2), spin grid (L, L).
Dataset = np.ndarray


class Prior(ABC):
    """Prior density on the sampling scale (log coordinates where flagged)."""

    @property
    @abstractmethod
    def dim(self) -> int: ...

    @abstractmethod
    def logpdf(self, phi: np.ndarray) -> float: ...

    @abstractmethod
    def sample(self, rng: RandomStream, n: int) -> np.ndarray:
        """``n`` draws, shape ``(n, dim)``."""

    def logpdf_many(self, phi: np.ndarray) -> np.ndarray:
        return np.array([self.logpdf(row) for row in np.atleast_2d(phi)])

    def support(self, phi: np.ndarray) -> bool:
        return bool(np.isfinite(self.logpdf(phi)))


class UniformPrior(Prior):
    """Independent U(low_i, high_i) coordinates."""

    def __init__(self, low: list[float] | np.ndarray, high: list[float] | np.ndarray):
        self.low = np.atleast_1d(np.asarray(low, dtype=float))
        self.high = np.atleast_1d(np.asarray(high, dtype=float))
        if self.low.shape != self.high.shape:
            raise DimensionError("uniform prior bounds differ in length")
        if np.any(self.high <= self.low):
            raise ParameterError("uniform prior needs low < high in every coordinate")
        self._log_volume = float(np.sum(np.log(self.high - self.low)))

    @property
    def dim(self) -> int:
        return self.low.shape[0]

    def logpdf(self, phi: np.ndarray) -> float:
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        if phi.shape != self.low.shape:
            raise DimensionError(f"parameter of shape {phi.shape} for a {self.dim}-D prior")
        if np.all((phi >= self.low) & (phi <= self.high)):
            return -self._log_volume
        return float("-inf")

    def logpdf_many(self, phi: np.ndarray) -> np.ndarray:
        phi = np.atleast_2d(phi)
        inside = np.all((phi >= self.low) & (phi <= self.high), axis=1)
        return np.where(inside, -self._log_volume, -np.inf)

    def sample(self, rng: RandomStream, n: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, size=(n, self.dim))


class GaussianPrior(Prior):
    """Independent N(mean_i, sd_i²) coordinates."""

    def __init__(self, mean: list[float] | np.ndarray, sd: list[float] | np.ndarray):
        self.mean = np.atleast_1d(np.asarray(mean, dtype=float))
        self.sd = np.atleast_1d(np.asarray(sd, dtype=float))
        if self.mean.shape != self.sd.shape:
            raise DimensionError("gaussian prior mean and sd differ in length")
        if np.any(self.sd <= 0):
            raise ParameterError("gaussian prior sd must be positive")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def logpdf(self, phi: np.ndarray) -> float:
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        if phi.shape != self.mean.shape:
            raise DimensionError(f"parameter of shape {phi.shape} for a {self.dim}-D prior")
        return float(np.sum(stats.norm.logpdf(phi, loc=self.mean, scale=self.sd)))

    def logpdf_many(self, phi: np.ndarray) -> np.ndarray:
        return np.sum(stats.norm.logpdf(np.atleast_2d(phi), loc=self.mean, scale=self.sd), axis=1)

    def sample(self, rng: RandomStream, n: int) -> np.ndarray:
        return rng.normal(self.mean, self.sd, size=(n, self.dim))


class Simulator(ABC):
    """A stochastic model p(x|θ) with its summary pipeline and prior.

    Parameters live on two scales: ``theta`` is the natural scale the
    simulator consumes, ``phi`` the sampling scale where the prior and the
    proposals act (log of the coordinates flagged in ``log_scale``).
    """

    name: str = ""
    parameter_names: tuple[str, ...] = ()
    log_scale: tuple[bool, ...] = ()
    n_s: int = 1

    def __init__(self, prior: Prior, scheme: BlockScheme):
        if prior.dim != len(self.parameter_names):
            raise DimensionError(
                f"{self.name}: prior has {prior.dim} coordinates, model has {len(self.parameter_names)}"
            )
        self.prior = prior
        self.scheme = scheme

    @property
    def p(self) -> int:
        return len(self.parameter_names)

    def to_natural(self, phi: np.ndarray) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        mask = np.asarray(self.log_scale, dtype=bool)
        return np.where(mask, np.exp(phi), phi)

    def to_sampling(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        mask = np.asarray(self.log_scale, dtype=bool)
        with np.errstate(divide="ignore"):
            return np.where(mask, np.log(np.where(mask, theta, 1.0)), theta)

    @abstractmethod
    def simulate(self, theta: np.ndarray, rng: RandomStream) -> Dataset: ...

    @abstractmethod
    def summarize(self, x: Dataset) -> np.ndarray: ...

    def simulate_many(self, theta: np.ndarray, rng: RandomStream, M: int) -> list[Dataset]:
        return [self.simulate(theta, rng) for _ in range(M)]

    def summarize_batch(self, xs: np.ndarray | list[Dataset]) -> np.ndarray:
        """Summaries of a stack of datasets, shape ``(R, n_s)``."""
        return np.array([self.summarize(x) for x in xs], dtype=float).reshape(len(xs), self.n_s)

    def observe(self, theta: np.ndarray, rng: RandomStream) -> Dataset:
        """Generate the observed dataset x* at the true θ."""
        return self.simulate(theta, rng)

    @property
    @abstractmethod
    def data_dims(self) -> int | tuple[int, ...]:
        """Declared size of a dataset: n_obs, or the grid shape."""

    def dims(self, x: Dataset) -> int | tuple[int, ...]:
        """Shape argument for index-matrix generation."""
        return x.shape[0] if self.scheme.kind != "grid_blocks" else x.shape


@dataclass
class ABCProblem:
    """Model plus observed data x* and its summaries s*."""

    model: Simulator
    x_star: Dataset
    s_star: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.s_star is None:
            self.s_star = self.model.summarize(self.x_star)
        self.s_star = np.atleast_1d(np.asarray(self.s_star, dtype=float))
        if self.s_star.shape[0] != self.model.n_s:
            raise DimensionError(
                f"{self.model.name}: observed summaries have length {self.s_star.shape[0]}, expected {self.model.n_s}"
            )
        if not np.all(np.isfinite(self.s_star)):
            raise ParameterError(f"{self.model.name}: observed summaries are not finite")

    @classmethod
    def generate(cls, model: Simulator, theta_true: np.ndarray, rng: RandomStream) -> "ABCProblem":
        return cls(model=model, x_star=model.observe(np.asarray(theta_true, dtype=float), rng))
