import math

import numpy as np
import pytest

from stratabc.exceptions import ParameterError
from stratabc.simulators.lotka_volterra import (
    LOG_VARIANCE_FLOOR,
    LotkaVolterra,
    LVPath,
    lv_gillespie,
    lv_hazards,
    lv_observe,
    lv_summaries,
    observation_times,
)
from stratabc.streams import make_stream

TRUE_THETA = np.array([1.0, 0.005, 0.6])


def test_hazards_by_hand():
    h = lv_hazards(TRUE_THETA, 50, 100)
    np.testing.assert_allclose(h, [100.0, 25.0, 30.0])
    assert np.sum(h) == pytest.approx(155.0)


def test_pure_birth_mean(rng):
    theta = np.array([0.5, 0.0, 0.0])
    n = 2000
    ends = np.array([lv_observe(lv_gillespie(theta, 0, 10, rng, t_max=2.0), np.array([2.0]))[0, 1] for _ in range(n)])
    expected = 10 * math.exp(1.0)
    se = math.sqrt(10 * math.exp(1.0) * (math.exp(1.0) - 1) / n)
    assert abs(np.mean(ends) - expected) < 3 * se


def test_reaction_counts_balance(rng):
    for _ in range(5):
        path = lv_gillespie(TRUE_THETA, 50, 100, rng, t_max=20.0)
        births, interactions, deaths = path.counts
        x1, x2 = path.states[-1]
        assert x2 == 100 + births - interactions
        assert x1 == 50 + interactions - deaths
        assert path.n_reactions == births + interactions + deaths
        assert np.all(np.diff(path.times) > 0)


def test_reaction_cap_stops_the_path(rng):
    path = lv_gillespie(TRUE_THETA, 50, 100, rng, reaction_cap=100)
    assert path.n_reactions == 100
    assert not path.capped


def test_extinction_freezes_the_series(rng):
    path = lv_gillespie(np.array([0.0, 0.0, 1.0]), 5, 0, rng, t_max=64.0)
    series = lv_observe(path, observation_times())
    np.testing.assert_array_equal(series[-1], [0.0, 0.0])
    assert path.counts[2] == 5


def test_invalid_rates_and_populations(rng):
    with pytest.raises(ParameterError):
        lv_gillespie(np.array([1.0, -0.1, 0.5]), 50, 100, rng)
    with pytest.raises(ParameterError):
        lv_gillespie(TRUE_THETA, -1, 100, rng)


def test_piecewise_constant_and_linear_observation():
    path = LVPath(
        times=np.array([0.0, 1.0, 3.0]),
        states=np.array([[10, 20], [11, 19], [12, 18]]),
        counts=np.array([0, 2, 0]),
    )
    times = np.array([0.0, 0.5, 1.0, 2.0, 5.0])
    np.testing.assert_array_equal(lv_observe(path, times)[:, 0], [10, 10, 11, 11, 12])
    np.testing.assert_allclose(lv_observe(path, times, "linear")[:, 0], [10, 10.5, 11, 11.5, 12])
    with pytest.raises(ParameterError):
        lv_observe(path, times, "cubic")


def test_observation_grid():
    times = observation_times()
    assert times.shape == (32,)
    assert times[0] == 0.0 and times[-1] == 62.0


def test_summaries_of_constant_series():
    s = lv_summaries(np.column_stack([np.full(32, 4.0), np.full(32, 7.0)]))
    expected = [4.0, math.log(LOG_VARIANCE_FLOOR), 0.0, 0.0, 7.0, math.log(LOG_VARIANCE_FLOOR), 0.0, 0.0, 0.0]
    np.testing.assert_allclose(s, expected)


def test_summaries_by_hand():
    x1 = np.array([1.0, 2.0, 3.0, 4.0])
    x2 = np.array([4.0, 3.0, 2.0, 1.0])
    s = lv_summaries(np.column_stack([x1, x2]))
    c = x1 - 2.5
    ss = np.sum(c * c)
    assert s[0] == 2.5
    assert s[1] == pytest.approx(math.log(ss / 3))
    assert s[2] == pytest.approx(np.sum(c[1:] * c[:-1]) / ss)
    assert s[3] == pytest.approx(np.sum(c[2:] * c[:-2]) / ss)
    assert s[8] == pytest.approx(-1.0)


def test_batch_summaries_match_single_ones(rng):
    model = LotkaVolterra()
    xs = np.stack([model.simulate(TRUE_THETA, rng) for _ in range(3)])
    assert xs.shape == (3, 32, 2)
    np.testing.assert_allclose(model.summarize_batch(xs), [model.summarize(x) for x in xs])
    assert model.summarize(xs[0]).shape == (9,)


def test_block_scheme_of_the_model():
    assert LotkaVolterra().scheme.validate(32) == []
    assert LotkaVolterra(block_length=7).scheme.validate(32)
    assert LotkaVolterra(block_length=7, overlapping=True).scheme.validate(32) == []


def test_simulation_is_deterministic_in_the_seed():
    model = LotkaVolterra()
    a = model.simulate(TRUE_THETA, make_stream(8))
    b = model.simulate(TRUE_THETA, make_stream(8))
    np.testing.assert_array_equal(a, b)
