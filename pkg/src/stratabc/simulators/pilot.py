import logging

import numpy as np

from stratabc.exceptions import ParameterError
from stratabc.inference.models import ScalingMatrix
from stratabc.inference.threshold import update_sigma_mad
from stratabc.simulators.base import Simulator
from stratabc.streams import RandomStream

logger = logging.getLogger(__name__)


def pilot_summaries(model: Simulator, n_pilot: int, rng: RandomStream) -> np.ndarray:
    """Summaries of ``n_pilot`` prior-predictive simulations."""
    phi = model.prior.sample(rng, n_pilot)
    return np.array([model.summarize(model.simulate(model.to_natural(row), rng)) for row in phi]).reshape(
        n_pilot, model.n_s
    )


def pilot_prior_predictive(model: Simulator, n_pilot: int, rng: RandomStream) -> ScalingMatrix:
    """Σ from squared MADs of prior-predictive summaries."""
    if n_pilot < 2:
        raise ParameterError(f"a pilot needs at least two simulations, got {n_pilot}")
    summaries = pilot_summaries(model, n_pilot, rng)
    finite = np.all(np.isfinite(summaries), axis=1)
    if not np.all(finite):
        logger.warning(f"[PILOT] dropping {int(np.sum(~finite))} of {n_pilot} non-finite summary rows")
        summaries = summaries[finite]
    if summaries.shape[0] < 2:
        raise ParameterError("fewer than two finite pilot summaries")
    sigma = update_sigma_mad(summaries)
    logger.info(f"[PILOT] {model.name}: Σ = {np.array2string(sigma.diag, precision=4)}")
    return sigma
