"""ABC sequential Monte Carlo with ESS-controlled threshold adaptation.

Each iteration picks δ_l so that the effective sample size drops by the
factor γ, reweights by the kernel ratio, resamples when the ESS falls below
E, and moves every live particle with one ABC-MH step at δ_l.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import bisect

from stratabc.exceptions import DegeneracyError, ParameterError
from stratabc.inference.models import ParticlePopulation, ScalingMatrix
from stratabc.inference.kernels import scaled_distance
from stratabc.simulators.base import ABCProblem, Prior
from stratabc.streams import RandomStream

logger = logging.getLogger(__name__)

DELTA_FLOOR = float(np.finfo(float).eps)
# Upper bracket for the first reweight, as a multiple of the largest distance
INFINITE_BRACKET_FACTOR = 1e6
BISECTION_XTOL = 1e-10


@dataclass
class SMCIterationRecord:
    iteration: int
    delta: float
    ess: float
    acceptance_rate: float
    resampled: bool
    fallback: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _normalize_log(log_weights: np.ndarray) -> np.ndarray:
    lw = np.asarray(log_weights, dtype=float)
    finite = np.isfinite(lw)
    if not np.any(finite):
        raise DegeneracyError("all particle weights are zero")
    w = np.zeros_like(lw)
    w[finite] = np.exp(lw[finite] - np.max(lw[finite]))
    return w / np.sum(w)


def ess(weights: np.ndarray) -> float:
    """(Σ W²)⁻¹ for the normalized weights W."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or np.any(np.isnan(w)):
        raise ParameterError("weights must be nonnegative")
    total = np.sum(w)
    if not total > 0:
        raise DegeneracyError("all particle weights are zero")
    W = w / total
    return float(1.0 / np.sum(W * W))


def ess_from_log(log_weights: np.ndarray) -> float:
    W = _normalize_log(log_weights)
    return float(1.0 / np.sum(W * W))


def log_kernel_ratio(
    distances: np.ndarray, delta: float, delta_prev: float, kind: str = "gaussian"
) -> np.ndarray:
    """log K_δ(d) − log K_δprev(d) up to a constant shared by all particles."""
    d = np.asarray(distances, dtype=float)
    if kind == "indicator":
        return np.where(d < delta, 0.0, -np.inf)
    prev_term = 0.0 if np.isinf(delta_prev) else d * d / (2.0 * delta_prev * delta_prev)
    return -d * d / (2.0 * delta * delta) + prev_term


def reweight_solve_delta(
    pop: ParticlePopulation, gamma: float, kind: str = "gaussian"
) -> tuple[float, np.ndarray, bool]:
    """Solve ESS(δ) = γ·ESS(previous weights) for δ ∈ [ε, δ_prev].

    Returns ``(delta, log_weights, bracketed)``. When the previous ESS is
    already reached at δ_prev (γ ≥ 1) the previous δ and weights come back
    unchanged. When even the smallest δ keeps the ESS above target the lower
    bracket is returned with ``bracketed=False``.
    """
    if not 0 < gamma:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    lw_prev = pop.log_weights
    target = gamma * ess_from_log(lw_prev)
    d = pop.distances
    delta_prev = pop.delta
    if np.isinf(delta_prev):
        finite = d[np.isfinite(d)]
        d_max = float(np.max(finite)) if finite.size else 1.0
        hi = INFINITE_BRACKET_FACTOR * (d_max if d_max > 0 else 1.0)
    else:
        hi = delta_prev
    lo = DELTA_FLOOR

    def weights_at(delta: float) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            lw = lw_prev + log_kernel_ratio(d, delta, delta_prev, kind)
        return np.where(np.isnan(lw), -np.inf, lw)

    def gap(delta: float) -> float:
        lw = weights_at(delta)
        if not np.any(np.isfinite(lw)):
            return -target
        return ess_from_log(lw) - target

    def h(log_delta: float) -> float:
        return gap(float(np.exp(log_delta)))

    if gap(hi) <= 0:
        return delta_prev, lw_prev, True
    if gap(lo) > 0:
        return lo, weights_at(lo), False
    log_delta = bisect(h, np.log(lo), np.log(hi), xtol=BISECTION_XTOL)
    delta = float(np.exp(log_delta))
    return delta, weights_at(delta), True


def resample_particles(pop: ParticlePopulation, E: float, rng: RandomStream) -> ParticlePopulation:
    """Multinomial resampling when ESS < E; weights reset to 1/N."""
    if ess_from_log(pop.log_weights) >= E:
        return pop
    W = _normalize_log(pop.log_weights)
    ancestors = np.sort(rng.choice(pop.N, size=pop.N, p=W))
    return ParticlePopulation(
        phi=pop.phi[ancestors],
        theta=pop.theta[ancestors],
        summaries=pop.summaries[ancestors],
        distances=pop.distances[ancestors],
        log_weights=np.full(pop.N, -np.log(pop.N)),
        delta=pop.delta,
        iteration=pop.iteration,
    )


def population_proposal_covariance(pop: ParticlePopulation, jitter: float = 1e-10) -> np.ndarray:
    """Diagonal random-walk covariance: twice the weighted per-coordinate variance."""
    W = _normalize_log(pop.log_weights)
    mean = W @ pop.phi
    var = W @ (pop.phi - mean) ** 2
    return np.diag(2.0 * var + jitter)


def move_step(
    pop: ParticlePopulation,
    problem: ABCProblem,
    sigma: ScalingMatrix,
    proposal_cov: np.ndarray,
    rng: RandomStream,
    kind: str = "gaussian",
) -> tuple[ParticlePopulation, float]:
    """One ABC-MH move per positive-weight particle at the current δ.

    Returns the moved population and the acceptance rate among attempted moves.
    """
    model = problem.model
    prior: Prior = model.prior
    out = pop.copy()
    chol = np.linalg.cholesky(np.atleast_2d(proposal_cov))
    live = np.flatnonzero(np.isfinite(pop.log_weights))
    attempted = accepted = 0
    for i in live:
        phi_new = pop.phi[i] + chol @ rng.standard_normal(model.p)
        lp_new = prior.logpdf(phi_new)
        attempted += 1
        if not np.isfinite(lp_new):
            continue
        theta_new = model.to_natural(phi_new)
        s_new = model.summarize(model.simulate(theta_new, rng))
        d_new = float(scaled_distance(problem.s_star, s_new, sigma))
        if np.isnan(d_new):
            continue
        log_ratio = (
            log_kernel_ratio(np.array([d_new]), pop.delta, np.inf, kind)[0]
            - log_kernel_ratio(np.array([pop.distances[i]]), pop.delta, np.inf, kind)[0]
            + lp_new
            - prior.logpdf(pop.phi[i])
        )
        if np.log1p(-rng.random()) < log_ratio:
            out.phi[i] = phi_new
            out.theta[i] = theta_new
            out.summaries[i] = s_new
            out.distances[i] = d_new
            accepted += 1
    rate = accepted / attempted if attempted else 0.0
    return out, rate


def initial_population(
    problem: ABCProblem,
    N: int,
    sigma: ScalingMatrix,
    rng: RandomStream,
    initial_sampler: Optional[Prior] = None,
) -> ParticlePopulation:
    """N draws from the prior (or from ``initial_sampler`` with weights π/q), δ_0 = ∞."""
    model = problem.model
    sampler = initial_sampler or model.prior
    phi = sampler.sample(rng, N)
    if initial_sampler is None:
        log_w = np.full(N, -np.log(N))
    else:
        log_w = model.prior.logpdf_many(phi) - initial_sampler.logpdf_many(phi)
    theta = np.array([model.to_natural(row) for row in phi])
    summaries = np.array([model.summarize(model.simulate(t, rng)) for t in theta]).reshape(N, model.n_s)
    distances = np.atleast_1d(scaled_distance(problem.s_star, summaries, sigma))
    distances = np.where(np.isnan(distances), np.inf, distances)
    return ParticlePopulation(
        phi=phi, theta=theta, summaries=summaries, distances=distances,
        log_weights=log_w, delta=float("inf"), iteration=0,
    )


def run_abc_smc(
    problem: ABCProblem,
    N: int,
    gamma: float,
    E: float,
    stop_rate: float,
    rng: RandomStream,
    *,
    sigma: Optional[ScalingMatrix] = None,
    kind: str = "gaussian",
    max_iterations: int = 1000,
    jitter: float = 1e-10,
    initial_sampler: Optional[Prior] = None,
    trace: Optional[list[SMCIterationRecord]] = None,
    on_iteration: Optional[Callable[[SMCIterationRecord, ParticlePopulation], None]] = None,
) -> ParticlePopulation:
    """Iterate reweight/resample/move until the move acceptance rate drops
    below ``stop_rate``; the population of the previous iteration is returned."""
    if N < 2:
        raise ParameterError("SMC needs at least two particles")
    if not 0 < gamma < 1:
        raise ParameterError(f"gamma must lie in (0, 1), got {gamma}")
    sigma = sigma if sigma is not None else ScalingMatrix.identity(problem.model.n_s)
    previous = initial_population(problem, N, sigma, rng, initial_sampler)
    consecutive_fallbacks = 0

    for l in range(1, max_iterations + 1):
        delta, log_w, bracketed = reweight_solve_delta(previous, gamma, kind)
        fallback = not bracketed
        if fallback:
            consecutive_fallbacks += 1
            logger.warning(f"[SMC] iteration {l}: no threshold root in the bracket, keeping δ = {previous.delta:.6g}")
            if consecutive_fallbacks >= 2:
                logger.warning("[SMC] two consecutive fallbacks, stopping")
                break
            delta, log_w = previous.delta, previous.log_weights
        else:
            consecutive_fallbacks = 0
        if not np.any(np.isfinite(log_w)):
            raise DegeneracyError(f"[SMC] iteration {l}: all weights are zero at δ = {delta:.6g}")

        current = ParticlePopulation(
            phi=previous.phi, theta=previous.theta, summaries=previous.summaries,
            distances=previous.distances, log_weights=log_w, delta=delta, iteration=l,
        )
        resampled_pop = resample_particles(current, E, rng)
        resampled = resampled_pop is not current
        cov = population_proposal_covariance(resampled_pop, jitter)
        moved, rate = move_step(resampled_pop, problem, sigma, cov, rng, kind)

        record = SMCIterationRecord(
            iteration=l, delta=delta, ess=ess_from_log(moved.log_weights),
            acceptance_rate=rate, resampled=resampled, fallback=fallback,
        )
        if trace is not None:
            trace.append(record)
        if on_iteration is not None:
            on_iteration(record, moved)
        logger.info(f"[SMC] iteration {l}: δ = {delta:.6g}, ESS = {record.ess:.1f}, acceptance {rate:.3f}")

        if rate < stop_rate:
            return previous
        previous = moved
    else:
        logger.warning(f"[SMC] reached max_iterations = {max_iterations}")
    return previous
