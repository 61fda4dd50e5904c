import numpy as np
import pytest

from stratabc.exceptions import ParameterError
from stratabc.inference.estimators import Evaluation, LikelihoodEstimator
from stratabc.inference.kernels import KernelConfig
from stratabc.inference.models import LikelihoodEstimate, ScalingMatrix, ThresholdSchedule
from stratabc.inference.samplers import ThresholdTuner
from stratabc.inference.threshold import maybe_reduce_delta, nearest_rank, tune_initial_delta, update_sigma_mad


def test_nearest_rank_oracle():
    d = np.arange(1.0, 101.0)
    assert nearest_rank(d, 5) == 5.0
    assert nearest_rank(d[::-1], 5) == 5.0
    assert nearest_rank(d, 100) == 100.0
    # the smallest percentile still picks the first order statistic
    assert nearest_rank(d, 0) == 1.0


def test_initial_delta_of_constant_distances():
    assert tune_initial_delta(np.full(20, 0.37), 5) == 0.37


def test_nearest_rank_rejects_empty_and_bad_percentiles():
    with pytest.raises(ParameterError):
        nearest_rank(np.array([]), 5)
    with pytest.raises(ParameterError):
        nearest_rank(np.arange(3.0), 101)


def test_mad_of_a_hand_column():
    sigma = update_sigma_mad(np.array([[1.0], [2.0], [3.0], [4.0], [5.0]]))
    np.testing.assert_allclose(sigma.diag, [1.0])


def test_mad_of_a_constant_column_is_floored():
    sigma = update_sigma_mad(np.column_stack([np.full(6, 2.0), np.arange(6.0)]), floor=1e-9)
    assert sigma.diag[0] == 1e-9
    assert sigma.diag[1] == pytest.approx(1.5**2)


def test_mad_needs_two_rows():
    with pytest.raises(ParameterError):
        update_sigma_mad(np.array([[1.0, 2.0]]))


def test_mad_is_scale_equivariant(rng):
    s = rng.standard_normal((200, 3))
    np.testing.assert_allclose(update_sigma_mad(2 * s).diag, 4 * update_sigma_mad(s).diag)


def _schedule(delta=1.0, psi=5.0):
    return ThresholdSchedule(delta=delta, psi=psi)


def test_rejection_keeps_delta():
    schedule = maybe_reduce_delta(_schedule(), False, np.linspace(0.0, 0.5, 100))
    assert schedule.delta == 1.0
    assert schedule.history == [(0, 1.0)]


def test_too_few_distances_inside_keeps_delta():
    d = np.concatenate([np.full(2, 0.1), np.full(98, 5.0)])
    assert maybe_reduce_delta(_schedule(), True, d).delta == 1.0


def test_enough_inside_shrinks_to_percentile():
    d = np.concatenate([np.linspace(0.01, 0.1, 10), np.full(90, 5.0)])
    schedule = maybe_reduce_delta(_schedule(), True, d, iteration=42)
    assert schedule.delta == pytest.approx(0.05)
    assert schedule.history[-1] == (42, pytest.approx(0.05))


def test_percentile_above_delta_keeps_delta():
    d = np.concatenate([np.full(10, 0.1), np.full(90, 5.0)])
    assert maybe_reduce_delta(_schedule(delta=0.4, psi=50.0), True, d).delta == 0.4


def test_schedule_is_non_increasing():
    schedule = _schedule()
    schedule.record(3, 0.5)
    with pytest.raises(ParameterError):
        schedule.record(4, 0.6)


def test_schedule_check_iterations():
    schedule = ThresholdSchedule(delta=1.0, check_period=5)
    assert [t for t in range(12) if schedule.is_check_iteration(t)] == [5, 10]


def test_rebase_restarts_the_schedule():
    schedule = _schedule(delta=0.5)
    schedule.record(3, 0.2)
    schedule.pending_check = True
    schedule.rebase(10, 4.0)
    assert schedule.delta == 4.0
    assert schedule.rebased_at == 10
    assert not schedule.pending_check
    assert schedule.current_segment() == [(10, 4.0)]
    with pytest.raises(ParameterError):
        schedule.record(11, 5.0)
    with pytest.raises(ParameterError):
        schedule.rebase(12, 0.0)


class ScriptedEstimator(LikelihoodEstimator):
    """Returns the given summary batches in order."""

    name = "scripted"

    def __init__(self, batches):
        super().__init__(None, KernelConfig("gaussian", np.zeros(1), ScalingMatrix.identity(1), 1.0))
        self.batches = iter(batches)

    def evaluate(self, phi, rng):
        return self.rescore(Evaluation(LikelihoodEstimate(1.0), summaries=next(self.batches)))


def _column(values):
    return np.asarray(values, dtype=float)[:, None]


def test_sigma_switch_resets_delta_to_the_percentile():
    wide = _column(np.linspace(0.01, 1.0, 100))
    narrow = wide * 0.01
    estimator = ScriptedEstimator([wide, narrow, narrow])
    tuner = ThresholdTuner(psi=5.0, K=2, n_iter=20)
    current = tuner.initialize(estimator, estimator.evaluate(None, None))
    delta0 = tuner.schedule.delta
    assert delta0 == pytest.approx(0.05)

    for t in (1, 2):
        tuner.observe(t, estimator.evaluate(None, None))
        current = tuner.after_step(t, False, current, estimator)

    sigma = update_sigma_mad(np.vstack([wide, narrow, narrow]))
    np.testing.assert_array_equal(estimator.kernel.sigma.diag, sigma.diag)
    expected = nearest_rank(estimator.kernel.distances(wide), 5.0)
    # the tighter Σ stretches distances, so δ goes up at the switch
    assert expected > 0.05
    assert tuner.schedule.delta == expected
    assert estimator.kernel.delta == expected
    assert tuner.schedule.history == [(0, delta0), (2, expected)]
    np.testing.assert_array_equal(current.distances, estimator.kernel.distances(wide))


def test_tuner_trace_on_a_scripted_stream():
    initial = _column(np.linspace(0.01, 1.0, 100))
    close = _column(np.linspace(0.001, 0.1, 100))
    sparse = _column(np.concatenate([np.full(4, 0.001), np.full(96, 1.0)]))
    closer = _column(np.linspace(0.0001, 0.01, 100))
    estimator = ScriptedEstimator([initial, close, close, sparse, closer])
    tuner = ThresholdTuner(psi=5.0, K=0, n_iter=100, tune_sigma=False)
    assert tuner.check_period == 5
    current = tuner.initialize(estimator, estimator.evaluate(None, None))
    schedule = tuner.schedule
    trace = [schedule.delta]

    def step(t, accepted, candidate=None):
        nonlocal current
        if candidate is not None and accepted:
            current = candidate
        current = tuner.after_step(t, accepted, current, estimator)
        trace.append(schedule.delta)

    step(1, False)
    step(5, False)  # due on a rejection: carried
    assert schedule.pending_check
    assert schedule.delta == trace[0]
    step(6, True, estimator.evaluate(None, None))
    assert not schedule.pending_check
    assert schedule.delta == min(trace[0], nearest_rank(close[:, 0], 5.0))
    step(7, True, estimator.evaluate(None, None))  # accepted but not a check iteration
    step(10, True, estimator.evaluate(None, None))  # check, but fewer than 5% inside
    assert schedule.delta == nearest_rank(close[:, 0], 5.0)
    step(15, True, estimator.evaluate(None, None))
    assert schedule.delta == nearest_rank(closer[:, 0], 5.0)

    assert trace == sorted(trace, reverse=True)
    assert [t for t, _ in schedule.history] == [0, 6, 15]
