import numpy as np
import pytest
from scipy.special import ndtri

from stratabc.exceptions import ParameterError
from stratabc.inference.resampling import BlockScheme
from stratabc.simulators.base import GaussianPrior, Simulator
from stratabc.simulators.gaussian import GaussianToy
from stratabc.simulators.pilot import pilot_prior_predictive, pilot_summaries


class _FixedSummaries(Simulator):
    """Two summaries: a constant and θ itself, NaN for negative θ when ``with_gaps``."""

    name = "fixed"
    parameter_names = ("theta",)
    log_scale = (False,)
    n_s = 2

    def __init__(self, with_gaps: bool = False):
        super().__init__(GaussianPrior([0.0], [1.0]), BlockScheme("iid"))
        self.with_gaps = with_gaps

    @property
    def data_dims(self) -> int:
        return 1

    def simulate(self, theta, rng):
        return np.atleast_1d(np.asarray(theta, dtype=float))

    def summarize(self, x):
        value = x[0] if not (self.with_gaps and x[0] < 0) else np.nan
        return np.array([3.0, value])


def test_constant_summaries_are_floored(rng, isolated_settings):
    sigma = pilot_prior_predictive(_FixedSummaries(), 2000, rng)
    assert sigma.diag[0] == isolated_settings.mad_floor
    # MAD of N(0, 1) is Φ⁻¹(0.75)
    assert sigma.diag[1] == pytest.approx(ndtri(0.75) ** 2, rel=0.3)


def test_gaussian_pilot_tracks_the_predictive_spread(rng):
    model = GaussianToy(n_obs=100)
    summaries = pilot_summaries(model, 2000, rng)
    assert summaries.shape == (2000, 1)
    sigma = pilot_prior_predictive(model, 2000, rng)
    direct = ndtri(0.75) ** 2 * np.var(summaries)
    assert sigma.diag[0] == pytest.approx(direct, rel=0.25)


def test_non_finite_pilot_rows_are_dropped(rng):
    sigma = pilot_prior_predictive(_FixedSummaries(with_gaps=True), 400, rng)
    assert np.all(np.isfinite(sigma.diag))


def test_pilot_needs_two_simulations(rng):
    with pytest.raises(ParameterError):
        pilot_prior_predictive(GaussianToy(), 1, rng)
