"""Gaussian toy model: n_obs iid N(θ, 1) draws summarised by their mean,
with a conjugate N(m0, σ0²) prior and closed-form posterior."""

import numpy as np
from scipy import stats

from stratabc.exceptions import ParameterError
from stratabc.inference.resampling import BlockScheme
from stratabc.simulators.base import Dataset, GaussianPrior, Simulator
from stratabc.streams import RandomStream

DEFAULT_N_OBS = 1000
PRIOR_MEAN = 0.1
PRIOR_SD = 0.2


class GaussianToy(Simulator):
    name = "gaussian"
    parameter_names = ("theta",)
    log_scale = (False,)
    n_s = 1

    def __init__(self, n_obs: int = DEFAULT_N_OBS, prior_mean: float = PRIOR_MEAN, prior_sd: float = PRIOR_SD):
        if n_obs < 1:
            raise ParameterError(f"n_obs must be positive, got {n_obs}")
        super().__init__(GaussianPrior([prior_mean], [prior_sd]), BlockScheme("iid"))
        self.n_obs = n_obs
        self.prior_mean = prior_mean
        self.prior_sd = prior_sd

    @property
    def data_dims(self) -> int:
        return self.n_obs

    def simulate(self, theta: np.ndarray, rng: RandomStream) -> Dataset:
        return gaussian_simulate(float(np.ravel(theta)[0]), self.n_obs, rng)

    def simulate_many(self, theta: np.ndarray, rng: RandomStream, M: int) -> np.ndarray:
        return rng.normal(float(np.ravel(theta)[0]), 1.0, size=(M, self.n_obs))

    def summarize(self, x: Dataset) -> np.ndarray:
        return np.array([np.mean(x)])

    def summarize_batch(self, xs: np.ndarray) -> np.ndarray:
        return np.mean(np.asarray(xs), axis=1)[:, None]

    def exact_posterior(self, data_mean: float, n_obs: int | None = None) -> tuple[float, float]:
        return gaussian_exact_posterior(self.prior_mean, self.prior_sd, data_mean, self.n_obs if n_obs is None else n_obs)

    def summary_loglik(self, s: float):
        """Exact log-likelihood of the observed mean as a function of θ."""
        return lambda theta: gaussian_exact_summary_loglik(float(np.ravel(theta)[0]), s, self.n_obs)


def gaussian_simulate(theta: float, n_obs: int, rng: RandomStream) -> Dataset:
    return rng.normal(theta, 1.0, size=n_obs)


def gaussian_exact_posterior(m0: float, sigma0: float, data_mean: float, n_obs: int) -> tuple[float, float]:
    """Conjugate update with unit observation variance; returns (mean, sd)."""
    if sigma0 <= 0:
        raise ParameterError("prior sd must be positive")
    precision = 1.0 / sigma0**2 + n_obs
    mean = (m0 / sigma0**2 + n_obs * data_mean) / precision
    return float(mean), float(1.0 / np.sqrt(precision))


def gaussian_exact_summary_loglik(theta: float, s: float, n_obs: int) -> float:
    """log N(s; θ, 1/n_obs), the sampling density of the sample mean."""
    return float(stats.norm.logpdf(s, loc=theta, scale=1.0 / np.sqrt(n_obs)))
