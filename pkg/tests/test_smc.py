import numpy as np
import pytest

from stratabc.exceptions import DegeneracyError
from stratabc.inference.models import ParticlePopulation, ScalingMatrix
from stratabc.inference.smc import (
    SMCIterationRecord,
    ess,
    ess_from_log,
    initial_population,
    move_step,
    resample_particles,
    reweight_solve_delta,
    run_abc_smc,
)
from stratabc.simulators.base import ABCProblem, UniformPrior
from stratabc.simulators.gaussian import GaussianToy
from stratabc.streams import make_stream


@pytest.fixture
def toy():
    return ABCProblem.generate(GaussianToy(n_obs=100), np.array([0.0]), make_stream(1))


def _population(distances, log_weights=None, delta=np.inf):
    d = np.asarray(distances, dtype=float)
    n = d.shape[0]
    phi = np.linspace(-1, 1, n)[:, None]
    return ParticlePopulation(
        phi=phi, theta=phi.copy(), summaries=d[:, None], distances=d,
        log_weights=np.full(n, -np.log(n)) if log_weights is None else np.asarray(log_weights, dtype=float),
        delta=delta,
    )


def test_ess_examples():
    assert ess(np.ones(1000)) == pytest.approx(1000)
    assert ess(np.array([0.0, 3.0, 0.0])) == pytest.approx(1.0)
    assert ess(np.array([0.5, 0.5, 0.0, 0.0])) == pytest.approx(2.0)


def test_ess_of_zero_weights_is_degenerate():
    with pytest.raises(DegeneracyError):
        ess(np.zeros(4))
    with pytest.raises(DegeneracyError):
        ess_from_log(np.full(4, -np.inf))


def test_reweight_hits_the_ess_target(rng):
    pop = _population(rng.exponential(1.0, size=400))
    delta, log_w, bracketed = reweight_solve_delta(pop, 0.9)
    assert bracketed
    assert np.isfinite(delta)
    assert ess_from_log(log_w) == pytest.approx(0.9 * 400, rel=1e-3)


def test_reweight_from_a_finite_threshold(rng):
    pop = _population(rng.exponential(1.0, size=300), delta=2.0)
    delta, log_w, bracketed = reweight_solve_delta(pop, 0.8)
    assert bracketed and delta < 2.0
    assert ess_from_log(log_w) == pytest.approx(0.8 * 300, rel=1e-3)


def test_reweight_with_gamma_one_keeps_everything(rng):
    pop = _population(rng.exponential(1.0, size=50), delta=1.5)
    delta, log_w, _ = reweight_solve_delta(pop, 1.0)
    assert delta == 1.5
    np.testing.assert_array_equal(log_w, pop.log_weights)


def test_equal_distances_leave_the_lower_bracket():
    pop = _population(np.full(100, 0.3), delta=1.0)
    delta, log_w, bracketed = reweight_solve_delta(pop, 0.9)
    assert not bracketed
    assert delta < 1e-10
    assert ess_from_log(log_w) == pytest.approx(100)


def test_indicator_reweighting_drops_particles_outside(rng):
    pop = _population(rng.uniform(0, 1, size=200))
    delta, log_w, bracketed = reweight_solve_delta(pop, 0.5, kind="indicator")
    assert bracketed
    assert np.all(np.isneginf(log_w[pop.distances >= delta]))


def test_resampling_is_identity_above_the_ess_bound(rng):
    pop = _population(np.ones(10))
    assert resample_particles(pop, 5.0, rng) is pop


def test_resampling_collapses_onto_a_single_heavy_particle(rng):
    log_w = np.full(10, -np.inf)
    log_w[3] = 0.0
    out = resample_particles(_population(np.arange(10.0), log_w), 5.0, rng)
    assert np.all(out.phi == out.phi[0])
    assert out.phi[0, 0] == pytest.approx(np.linspace(-1, 1, 10)[3])
    np.testing.assert_allclose(out.weights, np.full(10, 0.1))


def test_move_into_zero_prior_region_is_rejected(toy, rng):
    toy.model.prior = UniformPrior([-0.5], [0.5])
    pop = initial_population(toy, 20, ScalingMatrix.identity(1), rng)
    pop.phi[:] = 0.49
    pop.theta[:] = 0.49
    pop.delta = 1.0
    moved, _ = move_step(pop, toy, ScalingMatrix.identity(1), np.eye(1) * 100.0, rng)
    assert np.all(np.abs(moved.phi) <= 0.5)


def test_degenerate_proposal_always_moves_at_a_huge_threshold(toy, rng):
    pop = initial_population(toy, 30, ScalingMatrix.identity(1), rng)
    pop.delta = 1e12
    _, rate = move_step(pop, toy, ScalingMatrix.identity(1), np.eye(1) * 1e-30, rng)
    assert rate == pytest.approx(1.0)


def test_smc_stops_after_first_move_with_full_stop_rate(toy):
    trace: list[SMCIterationRecord] = []
    pop = run_abc_smc(toy, 100, 0.9, 50, 1.0, make_stream(3), trace=trace)
    assert len(trace) == 1
    assert pop.iteration == 0
    assert np.isinf(pop.delta)


def test_smc_thresholds_never_increase(toy):
    trace: list[SMCIterationRecord] = []
    pop = run_abc_smc(toy, 200, 0.8, 100, 0.05, make_stream(4), trace=trace, max_iterations=15)
    deltas = [r.delta for r in trace]
    assert all(b <= a for a, b in zip(deltas, deltas[1:]))
    assert pop.N == 200
    assert np.sum(pop.weights) == pytest.approx(1.0)


def test_smc_on_iteration_callback_sees_every_population(toy):
    seen = []
    run_abc_smc(toy, 100, 0.8, 50, 0.05, make_stream(5), max_iterations=4,
                on_iteration=lambda record, pop: seen.append((record.iteration, pop.delta)))
    assert [i for i, _ in seen] == list(range(1, len(seen) + 1))


@pytest.mark.slow
def test_smc_population_mean_matches_the_conjugate_posterior():
    problem = ABCProblem.generate(GaussianToy(n_obs=100), np.array([0.0]), make_stream(6))
    pop = run_abc_smc(problem, 256, 0.9, 128, 0.02, make_stream(7))
    W = pop.weights
    mean = float(W @ pop.theta[:, 0])
    post_mean, post_sd = problem.model.exact_posterior(float(problem.s_star[0]))
    assert abs(mean - post_mean) < 3 * post_sd / np.sqrt(ess(W)) + 0.02
