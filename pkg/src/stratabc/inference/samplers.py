"""ABC-MCMC samplers.

One Metropolis-Hastings driver (:func:`run_abc_mcmc`) is shared by every
variant; they differ only in the likelihood estimator plugged in and, for
rABC, in the threshold tuner that shrinks δ and rescales Σ during the run.
"""

from __future__ import annotations

import logging
import math
import time
from typing import Callable, Optional

import numpy as np

from stratabc.config import get_settings
from stratabc.exceptions import InvariantViolation, ParameterError, StartupError
from stratabc.inference.estimators import (
    AnalyticEstimator,
    Evaluation,
    LikelihoodEstimator,
    PseudoMarginalEstimator,
    ResampledEstimator,
    StratifiedEstimator,
)
from stratabc.inference.kernels import KernelConfig
from stratabc.inference.models import Chain, ProposalState, ScalingMatrix, StrataSpec, ThresholdSchedule
from stratabc.inference.proposals import RandomWalkProposal
from stratabc.inference.resampling import make_index_matrix
from stratabc.inference.threshold import (
    maybe_reduce_delta,
    nearest_rank,
    tune_initial_delta,
    update_sigma_mad,
)
from stratabc.simulators.base import ABCProblem
from stratabc.streams import RandomStream, spawn

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[int, int], None]


def mh_accept(
    log_lik_new: float,
    log_prior_new: float,
    log_lik_old: float,
    log_prior_old: float,
    rng: RandomStream,
    log_q_ratio: float = 0.0,
) -> bool:
    """Metropolis-Hastings test in log space.

    Accepts with probability min{1, (lik_new·prior_new)/(lik_old·prior_old)·q_ratio}.
    A zero new likelihood (log -inf) is always rejected.
    """
    if not (log_lik_old > -np.inf and log_prior_old > -np.inf):
        raise InvariantViolation("retained state has zero likelihood or zero prior density")
    if not (log_lik_new > -np.inf and log_prior_new > -np.inf):
        return False
    log_ratio = log_lik_new + log_prior_new - log_lik_old - log_prior_old + log_q_ratio
    if log_ratio >= 0:
        return True
    return bool(math.log1p(-rng.random()) < log_ratio)


class ThresholdTuner:
    """Self-tuning of δ and Σ during an rABC run.

    δ_0 is the ψ-percentile of the initial distances. All summaries simulated
    during the first ``K`` iterations feed a squared-MAD Σ installed at
    iteration K, where δ restarts at the ψ-percentile of the retained
    distances under the new Σ. Afterwards every ``check_period`` iterations
    δ may shrink; a check that lands on a rejection is carried to the next
    acceptance.
    """

    def __init__(self, psi: float, K: int, n_iter: int, check_fraction: float = 0.05, tune_sigma: bool = True):
        if K < 0 or K > n_iter:
            raise ParameterError(f"burn-in K must be in [0, {n_iter}], got {K}")
        self.psi = psi
        self.K = K
        self.tune_sigma = tune_sigma
        self.check_period = max(1, math.ceil(check_fraction * n_iter))
        self.schedule: Optional[ThresholdSchedule] = None
        self._collected: list[np.ndarray] = []

    def initialize(self, estimator: LikelihoodEstimator, evaluation: Evaluation) -> Evaluation:
        delta0 = tune_initial_delta(evaluation.distances, self.psi)
        if not delta0 > 0:
            # all resampled summaries hit s* exactly
            delta0 = float(np.max(evaluation.distances)) or 1.0
        self.schedule = ThresholdSchedule(delta=delta0, psi=self.psi, check_period=self.check_period)
        estimator.set_kernel(estimator.kernel.with_delta(delta0))
        self._collected = [evaluation.all_summaries()]
        logger.info(f"[rABC] initial threshold δ0 = {delta0:.6g} (ψ = {self.psi})")
        return estimator.rescore(evaluation)

    def observe(self, iteration: int, evaluation: Optional[Evaluation]) -> None:
        if evaluation is not None and iteration <= self.K and self.tune_sigma:
            self._collected.append(evaluation.all_summaries())

    def after_step(
        self, iteration: int, accepted: bool, current: Evaluation, estimator: LikelihoodEstimator
    ) -> Evaluation:
        schedule = self.schedule
        if iteration == self.K and self.tune_sigma:
            sigma = update_sigma_mad(np.vstack(self._collected))
            self._collected = []
            estimator.set_kernel(estimator.kernel.with_sigma(sigma))
            current = estimator.rescore(current)
            # distances are on a new scale, so δ restarts at the ψ-percentile
            d_psi = nearest_rank(current.distances, schedule.psi)
            if d_psi > 0:
                schedule.rebase(iteration, d_psi)
            estimator.set_kernel(estimator.kernel.with_delta(schedule.delta))
            logger.info(f"[rABC] Σ updated from {self.K} iterations, δ = {schedule.delta:.6g}")
            return estimator.rescore(current)
        if iteration <= self.K:
            return current
        due = schedule.is_check_iteration(iteration - self.K)
        if due and not accepted:
            schedule.pending_check = True
            return current
        if not (due or (schedule.pending_check and accepted)):
            return current
        schedule.pending_check = False
        before = schedule.delta
        maybe_reduce_delta(schedule, accepted, current.distances, iteration=iteration)
        if schedule.delta < before:
            estimator.set_kernel(estimator.kernel.with_delta(schedule.delta))
            current = estimator.rescore(current)
        return current


def _startup(
    problem: ABCProblem,
    estimator: LikelihoodEstimator,
    init_phi: np.ndarray,
    rng: RandomStream,
    tuner: Optional[ThresholdTuner],
) -> Evaluation:
    retries = get_settings().startup_retries
    if not np.isfinite(problem.model.prior.logpdf(init_phi)):
        raise StartupError(f"{problem.model.name}: initial θ lies outside the prior support")
    for attempt in range(1, retries + 1):
        evaluation = estimator.evaluate(init_phi, rng)
        if tuner is not None:
            evaluation = tuner.initialize(estimator, evaluation)
        if evaluation.estimate.positive:
            if attempt > 1:
                logger.info(f"[MCMC] valid initial state after {attempt} attempts")
            return evaluation
        logger.debug(f"[MCMC] startup attempt {attempt} gave a zero likelihood")
    raise StartupError(
        f"{problem.model.name}/{estimator.name}: no positive initial likelihood "
        f"(all strata hit) after {retries} attempts"
    )


def run_abc_mcmc(
    problem: ABCProblem,
    estimator: LikelihoodEstimator,
    proposal: RandomWalkProposal,
    n_iter: int,
    init_phi: np.ndarray,
    rng: RandomStream,
    *,
    burn_in: int = 0,
    tuner: Optional[ThresholdTuner] = None,
    progress: Optional[ProgressCallback] = None,
) -> Chain:
    """Pseudo-marginal Metropolis-Hastings with a pluggable likelihood estimator."""
    if n_iter < 1:
        raise ParameterError(f"number of iterations must be positive, got {n_iter}")
    model = problem.model
    prior = model.prior
    current_phi = np.atleast_1d(np.asarray(init_phi, dtype=float)).copy()
    if current_phi.shape[0] != model.p:
        raise ParameterError(f"initial θ has {current_phi.shape[0]} coordinates, model has {model.p}")

    current = _startup(problem, estimator, current_phi, rng, tuner)
    current_lp = prior.logpdf(current_phi)

    history = np.empty((n_iter + 1, model.p))
    history[0] = current_phi
    log_lik = np.empty(n_iter)
    accepted_flags = np.zeros(n_iter, dtype=bool)
    evaluated_flags = np.zeros(n_iter, dtype=bool)
    deltas = np.empty(n_iter)
    spec = getattr(estimator, "spec", None)
    strata_counts = np.zeros((n_iter, spec.J), dtype=np.int64) if spec is not None else None

    start = time.perf_counter()
    for t in range(1, n_iter + 1):
        proposal.maybe_adapt(t, history[:t])
        phi_new = proposal.propose(current_phi, rng)
        lp_new = prior.logpdf(phi_new)
        candidate: Optional[Evaluation] = None
        accepted = False
        if np.isfinite(lp_new):
            candidate = estimator.evaluate(phi_new, rng)
            accepted = mh_accept(candidate.log_value, lp_new, current.log_value, current_lp, rng)
        if tuner is not None:
            tuner.observe(t, candidate)
        if accepted:
            current_phi, current, current_lp = phi_new, candidate, lp_new
        if tuner is not None:
            current = tuner.after_step(t, accepted, current, estimator)
        if not current.estimate.positive:
            raise InvariantViolation(f"iteration {t}: retained state has zero likelihood")

        i = t - 1
        history[t] = current_phi
        log_lik[i] = current.log_value
        accepted_flags[i] = accepted
        evaluated_flags[i] = candidate is not None and not candidate.estimate.neglected_stratum
        deltas[i] = estimator.kernel.delta if estimator.kernel is not None else np.nan
        if strata_counts is not None and current.strata is not None:
            strata_counts[i] = current.strata.n
        if progress is not None:
            progress(t, n_iter)
    wall_time = time.perf_counter() - start

    phi = history[1:]
    chain = Chain(
        phi=phi,
        theta=np.array([model.to_natural(row) for row in phi]),
        log_likelihood=log_lik,
        accepted=accepted_flags,
        delta=deltas,
        strata_counts=strata_counts,
        evaluated=evaluated_flags,
        parameter_names=model.parameter_names,
        sampler=estimator.name,
        burn_in=burn_in,
        sigma=estimator.kernel.sigma if estimator.kernel is not None else None,
        schedule=tuner.schedule if tuner is not None else None,
        proposal=proposal.state,
        wall_time=wall_time,
    )
    logger.info(
        f"[MCMC] {estimator.name}: {n_iter} iterations, acceptance {chain.acceptance_rate:.3f}, "
        f"{chain.evaluated_acceptance_rate:.3f} of evaluated proposals, "
        f"{wall_time:.1f}s"
    )
    return chain


def _kernel(problem: ABCProblem, kind: str, sigma: Optional[ScalingMatrix], delta: float) -> KernelConfig:
    sigma = sigma if sigma is not None else ScalingMatrix.identity(problem.model.n_s)
    return KernelConfig(kind, problem.s_star, sigma, delta)


def _index_stream(rng: RandomStream, index_rng: Optional[RandomStream]) -> RandomStream:
    return index_rng if index_rng is not None else spawn(rng, 1)[0]


def run_pm_abc_mcmc(
    problem: ABCProblem,
    M: int,
    delta: float,
    sigma: Optional[ScalingMatrix],
    n_iter: int,
    init_phi: np.ndarray,
    rng: RandomStream,
    *,
    proposal: ProposalState,
    burn_in: int = 0,
    kernel: str = "gaussian",
    progress: Optional[ProgressCallback] = None,
) -> Chain:
    """pmABC-MCMC: M fresh simulations per proposal."""
    estimator = PseudoMarginalEstimator(problem, _kernel(problem, kernel, sigma, delta), M)
    return run_abc_mcmc(
        problem, estimator, RandomWalkProposal(proposal), n_iter, init_phi, rng,
        burn_in=burn_in, progress=progress,
    )


def run_r_abc_mcmc(
    problem: ABCProblem,
    R: int,
    n_iter: int,
    init_phi: np.ndarray,
    rng: RandomStream,
    *,
    proposal: ProposalState,
    delta: Optional[float] = None,
    sigma: Optional[ScalingMatrix] = None,
    self_tune: bool = True,
    psi: float = 5.0,
    K_burnin: int = 0,
    check_fraction: float = 0.05,
    burn_in: int = 0,
    kernel: str = "gaussian",
    index_rng: Optional[RandomStream] = None,
    progress: Optional[ProgressCallback] = None,
) -> Chain:
    """rABC-MCMC: one simulation per proposal, R resamples through a fixed u.

    With ``self_tune`` δ starts at the ψ-percentile of the initial distances
    and Σ is replaced by squared MADs after ``K_burnin`` iterations;
    otherwise ``delta`` and ``sigma`` stay fixed.
    """
    if not self_tune and delta is None:
        raise ParameterError("a fixed-threshold rABC run needs delta")
    u = make_index_matrix(problem.model.scheme, problem.model.dims(problem.x_star), R, _index_stream(rng, index_rng))
    estimator = ResampledEstimator(problem, _kernel(problem, kernel, sigma, delta or 1.0), u)
    tuner = ThresholdTuner(psi, K_burnin, n_iter, check_fraction, tune_sigma=K_burnin > 0) if self_tune else None
    return run_abc_mcmc(
        problem, estimator, RandomWalkProposal(proposal), n_iter, init_phi, rng,
        burn_in=burn_in, tuner=tuner, progress=progress,
    )


def run_rs_abc_mcmc(
    problem: ABCProblem,
    R1: int,
    R2: int,
    spec: StrataSpec,
    delta: float,
    sigma: Optional[ScalingMatrix],
    n_iter: int,
    init_phi: np.ndarray,
    rng: RandomStream,
    *,
    proposal: ProposalState,
    burn_in: int = 0,
    kernel: str = "gaussian",
    averaged: bool = False,
    index_rng: Optional[RandomStream] = None,
    progress: Optional[ProgressCallback] = None,
) -> Chain:
    """rsABC-MCMC: training and testing simulations per proposal, fixed u1 and u2.

    Proposals leaving a stratum empty are rejected outright.
    """
    stream = _index_stream(rng, index_rng)
    dims = problem.model.dims(problem.x_star)
    u1 = make_index_matrix(problem.model.scheme, dims, R1, stream)
    u2 = make_index_matrix(problem.model.scheme, dims, R2, stream)
    estimator = StratifiedEstimator(
        problem, _kernel(problem, kernel, sigma, delta), spec, u1, u2, averaged=averaged
    )
    return run_abc_mcmc(
        problem, estimator, RandomWalkProposal(proposal), n_iter, init_phi, rng,
        burn_in=burn_in, progress=progress,
    )


def run_xrs_abc_mcmc(
    problem: ABCProblem,
    R1: int,
    R2: int,
    spec: StrataSpec,
    delta: float,
    sigma: Optional[ScalingMatrix],
    n_iter: int,
    init_phi: np.ndarray,
    rng: RandomStream,
    **kwargs,
) -> Chain:
    """xrsABC-MCMC: rsABC with the exchanged-samples averaged likelihood."""
    return run_rs_abc_mcmc(
        problem, R1, R2, spec, delta, sigma, n_iter, init_phi, rng, averaged=True, **kwargs
    )


def run_analytic_mcmc(
    problem: ABCProblem,
    loglik: Callable[[np.ndarray], float],
    n_iter: int,
    init_phi: np.ndarray,
    rng: RandomStream,
    *,
    proposal: ProposalState,
    burn_in: int = 0,
    progress: Optional[ProgressCallback] = None,
) -> Chain:
    """Plain Metropolis-Hastings on an exact likelihood of natural-scale θ."""
    estimator = AnalyticEstimator(problem, loglik)
    return run_abc_mcmc(
        problem, estimator, RandomWalkProposal(proposal), n_iter, init_phi, rng,
        burn_in=burn_in, progress=progress,
    )
