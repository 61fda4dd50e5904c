"""Per-θ ABC likelihood estimators plugged into the generic MCMC driver.

Each estimator simulates at a proposed θ and returns an :class:`Evaluation`
holding the log-likelihood estimate together with the summaries and
distances it was built from, so a retained state can be rescored when δ or Σ
change without simulating again.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from stratabc.exceptions import DimensionError
from stratabc.inference.kernels import KernelConfig
from stratabc.inference.models import LikelihoodEstimate, StrataEstimate, StrataSpec
from stratabc.inference.resampling import resample_batch
from stratabc.inference.stratification import averaged_from_distances, log_mean_kernel, post_stratified
from stratabc.simulators.base import ABCProblem, Simulator
from stratabc.streams import RandomStream


@dataclass
class Evaluation:
    """Likelihood estimate at one θ plus the material it was computed from."""

    estimate: LikelihoodEstimate
    summaries: Optional[np.ndarray] = None
    distances: Optional[np.ndarray] = None
    train_summaries: Optional[np.ndarray] = None
    strata: Optional[StrataEstimate] = None

    @property
    def log_value(self) -> float:
        return self.estimate.log_value

    def all_summaries(self) -> np.ndarray:
        """Every summary simulated for this θ (training and testing sets stacked)."""
        if self.summaries is None:
            return np.empty((0, 0))
        if self.train_summaries is None:
            return self.summaries
        return np.vstack([self.train_summaries, self.summaries])


class LikelihoodEstimator(ABC):
    """Strategy producing an ABC likelihood estimate for a parameter value."""

    name: str = ""

    def __init__(self, problem: ABCProblem, kernel: KernelConfig):
        self.problem = problem
        self.kernel = kernel

    @property
    def model(self) -> Simulator:
        return self.problem.model

    def set_kernel(self, kernel: KernelConfig) -> None:
        self.kernel = kernel

    @abstractmethod
    def evaluate(self, phi: np.ndarray, rng: RandomStream) -> Evaluation: ...

    def rescore(self, evaluation: Evaluation) -> Evaluation:
        """Recompute the estimate of stored summaries under the current kernel."""
        d = self.kernel.distances(evaluation.summaries)
        log_value = log_mean_kernel(self.kernel.log_values(d))
        with np.errstate(over="ignore"):
            estimate = LikelihoodEstimate(value=float(np.exp(log_value)), log_value=log_value)
        return Evaluation(estimate=estimate, summaries=evaluation.summaries, distances=d)


class PseudoMarginalEstimator(LikelihoodEstimator):
    """Mean kernel over M independent simulations."""

    name = "pm"

    def __init__(self, problem: ABCProblem, kernel: KernelConfig, M: int):
        super().__init__(problem, kernel)
        if M < 1:
            raise ValueError(f"M must be at least 1, got {M}")
        self.M = M

    def evaluate(self, phi: np.ndarray, rng: RandomStream) -> Evaluation:
        theta = self.model.to_natural(phi)
        summaries = self.model.summarize_batch(self.model.simulate_many(theta, rng, self.M))
        return self.rescore(Evaluation(estimate=LikelihoodEstimate.rejected(), summaries=summaries))


class ResampledEstimator(LikelihoodEstimator):
    """One simulation, R bootstrap resamples through a fixed index matrix."""

    name = "r"

    def __init__(self, problem: ABCProblem, kernel: KernelConfig, u: np.ndarray):
        super().__init__(problem, kernel)
        self.u = np.asarray(u, dtype=np.int64)
        self.u.setflags(write=False)

    @property
    def R(self) -> int:
        return self.u.shape[0]

    def evaluate(self, phi: np.ndarray, rng: RandomStream) -> Evaluation:
        theta = self.model.to_natural(phi)
        x = self.model.simulate(theta, rng)
        summaries = self.model.summarize_batch(resample_batch(x, self.u, self.model.scheme))
        return self.rescore(Evaluation(estimate=LikelihoodEstimate.rejected(), summaries=summaries))


class StratifiedEstimator(LikelihoodEstimator):
    """Two simulations per θ: training set for ω̂ (indices u1), testing set for
    the counts and kernel sums (indices u2). ``averaged`` also swaps the roles
    and averages the two estimates."""

    def __init__(
        self,
        problem: ABCProblem,
        kernel: KernelConfig,
        spec: StrataSpec,
        u1: np.ndarray,
        u2: np.ndarray,
        averaged: bool = False,
    ):
        super().__init__(problem, kernel)
        self.spec = spec
        self.u1 = np.asarray(u1, dtype=np.int64)
        self.u2 = np.asarray(u2, dtype=np.int64)
        if self.u1.ndim != 2 or self.u2.ndim != 2:
            raise DimensionError("index matrices must be 2-D")
        self.u1.setflags(write=False)
        self.u2.setflags(write=False)
        self.averaged = averaged
        self.name = "xrs" if averaged else "rs"

    def evaluate(self, phi: np.ndarray, rng: RandomStream) -> Evaluation:
        theta = self.model.to_natural(phi)
        scheme = self.model.scheme
        x_train = self.model.simulate(theta, rng)
        x_test = self.model.simulate(theta, rng)
        train = self.model.summarize_batch(resample_batch(x_train, self.u1, scheme))
        test = self.model.summarize_batch(resample_batch(x_test, self.u2, scheme))
        return self.rescore(
            Evaluation(estimate=LikelihoodEstimate.rejected(), summaries=test, train_summaries=train)
        )

    def rescore(self, evaluation: Evaluation) -> Evaluation:
        train_d = self.kernel.distances(evaluation.train_summaries)
        test_d = self.kernel.distances(evaluation.summaries)
        if self.averaged:
            estimate, strata = averaged_from_distances(train_d, test_d, self.kernel, self.spec)
        else:
            estimate, strata = post_stratified(train_d, test_d, self.kernel.log_values(test_d), self.spec)
        return Evaluation(
            estimate=estimate,
            summaries=evaluation.summaries,
            train_summaries=evaluation.train_summaries,
            distances=test_d,
            strata=strata,
        )


class AnalyticEstimator(LikelihoodEstimator):
    """Exact log-likelihood supplied as a function of natural-scale θ."""

    name = "analytic"

    def __init__(self, problem: ABCProblem, loglik: Callable[[np.ndarray], float]):
        self.problem = problem
        self.kernel = None  # type: ignore[assignment]
        self.loglik = loglik

    def evaluate(self, phi: np.ndarray, rng: RandomStream) -> Evaluation:
        value = float(self.loglik(self.model.to_natural(phi)))
        with np.errstate(over="ignore"):
            return Evaluation(estimate=LikelihoodEstimate(value=float(np.exp(value)), log_value=value))

    def rescore(self, evaluation: Evaluation) -> Evaluation:
        return evaluation
