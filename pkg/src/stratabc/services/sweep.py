"""Likelihood-curve sweeps and the averaged-estimator variance experiment."""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from stratabc.config import get_settings
from stratabc.exceptions import ConfigError, StartupError
from stratabc.inference.estimators import (
    LikelihoodEstimator,
    PseudoMarginalEstimator,
    ResampledEstimator,
    StratifiedEstimator,
)
from stratabc.inference.kernels import KernelConfig
from stratabc.inference.models import ScalingMatrix, StrataSpec
from stratabc.inference.resampling import make_index_matrix
from stratabc.inference.stratification import averaged_from_distances, post_stratified
from stratabc.inference.threshold import nearest_rank
from stratabc.schemas.experiment import ABC_MCMC, ExperimentConfig, StageConfig
from stratabc.services.experiment import build_problem
from stratabc.simulators.base import ABCProblem
from stratabc.simulators.registry import get_model
from stratabc.streams import Purpose, RandomStream, make_stream

logger = logging.getLogger(__name__)

SweepProgress = Callable[[str, int, int], None]


@dataclass
class CurvePoint:
    theta: float
    mean: float
    lower: float
    upper: float
    variance: float
    median_attempts: float
    exact: float = float("nan")


def make_estimator(
    problem: ABCProblem,
    stage: StageConfig,
    sigma: ScalingMatrix,
    index_rng: RandomStream,
    delta: Optional[float] = None,
) -> LikelihoodEstimator:
    """Estimator of an ABC stage with its index matrices drawn from ``index_rng``."""
    delta = float(stage.delta) if delta is None else delta
    model = problem.model
    kernel = KernelConfig(stage.kernel, problem.s_star, sigma, delta)
    dims = model.dims(problem.x_star)
    if stage.sampler == "pm":
        return PseudoMarginalEstimator(problem, kernel, stage.M)
    if stage.sampler == "r":
        return ResampledEstimator(problem, kernel, make_index_matrix(model.scheme, dims, stage.R, index_rng))
    if stage.sampler in ("rs", "xrs"):
        u1 = make_index_matrix(model.scheme, dims, stage.R1, index_rng)
        u2 = make_index_matrix(model.scheme, dims, stage.R2, index_rng)
        spec = StrataSpec.relative(stage.strata, delta)
        return StratifiedEstimator(problem, kernel, spec, u1, u2, averaged=stage.sampler == "xrs")
    raise ConfigError([f"stage {stage.name}: sampler {stage.sampler!r} has no likelihood estimator"])


def estimate_with_retries(
    estimator: LikelihoodEstimator, phi: np.ndarray, rng: RandomStream, max_attempts: int
) -> tuple[float, int]:
    """Log-likelihood estimate, re-simulating while a stratum stays empty.

    Returns the estimate and the number of attempts it took.
    """
    for attempt in range(1, max_attempts + 1):
        estimate = estimator.evaluate(phi, rng).estimate
        if not estimate.neglected_stratum:
            return estimate.log_value, attempt
    raise StartupError(f"{estimator.name}: every stratum never filled in {max_attempts} attempts at φ = {phi}")


def likelihood_curve(
    problem: ABCProblem,
    estimator: LikelihoodEstimator,
    grid: np.ndarray,
    base_theta: np.ndarray,
    parameter: int,
    reps: int,
    rng: RandomStream,
    exact: Optional[Callable[[np.ndarray], float]] = None,
    progress: Optional[Callable[[int, int], None]] = None,
) -> list[CurvePoint]:
    """``reps`` independent log-likelihood estimates at every grid value of one coordinate."""
    model = problem.model
    max_attempts = get_settings().startup_retries
    points = []
    for k, value in enumerate(grid):
        theta = np.asarray(base_theta, dtype=float).copy()
        theta[parameter] = value
        phi = model.to_sampling(theta)
        values = np.empty(reps)
        attempts = np.empty(reps)
        for r in range(reps):
            values[r], attempts[r] = estimate_with_retries(estimator, phi, rng, max_attempts)
        lo, hi = nearest_rank(values, 2.5), nearest_rank(values, 97.5)
        points.append(
            CurvePoint(
                theta=float(value),
                mean=float(np.mean(values)),
                lower=float(lo),
                upper=float(hi),
                variance=float(np.var(values, ddof=1)),
                median_attempts=float(np.median(attempts)),
                exact=float(exact(theta)) if exact is not None else float("nan"),
            )
        )
        if progress is not None:
            progress(k + 1, len(grid))
    return points


def write_curve(path: Path, points: list[CurvePoint]) -> None:
    rows = np.array(
        [[p.theta, p.mean, p.lower, p.upper, p.variance, p.median_attempts, p.exact] for p in points]
    ).reshape(-1, 7)
    header = "\t".join(["theta", "mean_loglik", "q2.5", "q97.5", "variance", "median_attempts", "exact_loglik"])
    np.savetxt(path, rows, fmt="%.17g", delimiter="\t", header=header, comments="")


def averaged_variance_ratio(
    problem: ABCProblem,
    theta: np.ndarray,
    R1: int,
    R2: int,
    spec: StrataSpec,
    kernel: KernelConfig,
    reps: int,
    rng: RandomStream,
) -> tuple[float, int]:
    """Var(averaged) / Var(single) post-stratified likelihood over ``reps``
    replications in which every stratum of both halves is filled.

    Both estimators share each replication's training and testing sets.
    Returns the ratio and the number of discarded replications.
    """
    model = problem.model
    dims = model.dims(problem.x_star)
    u1 = make_index_matrix(model.scheme, dims, R1, rng)
    u2 = make_index_matrix(model.scheme, dims, R2, rng)
    estimator = StratifiedEstimator(problem, kernel, spec, u1, u2)
    phi = model.to_sampling(np.asarray(theta, dtype=float))
    single = np.empty(reps)
    averaged = np.empty(reps)
    kept = discarded = 0
    limit = reps * get_settings().startup_retries
    while kept < reps:
        if kept + discarded >= limit:
            raise StartupError(f"only {kept} of {reps} replications filled every stratum")
        evaluation = estimator.evaluate(phi, rng)
        train_d = kernel.distances(evaluation.train_summaries)
        test_d = kernel.distances(evaluation.summaries)
        one, _ = post_stratified(train_d, test_d, kernel.log_values(test_d), spec)
        both, _ = averaged_from_distances(train_d, test_d, kernel, spec)
        if one.neglected_stratum or both.neglected_stratum:
            discarded += 1
            continue
        single[kept], averaged[kept] = one.value, both.value
        kept += 1
    ratio = float(np.var(averaged, ddof=1) / np.var(single, ddof=1))
    logger.info(f"[SWEEP] averaged/single variance ratio {ratio:.3f} ({discarded} replications discarded)")
    return ratio, discarded


def run_sweep(
    config: ExperimentConfig, out: Path, progress: Optional[SweepProgress] = None
) -> list[Path]:
    """Likelihood curve for every ABC stage with its own δ and Σ.

    Stages that inherit δ or Σ, or use the pilot, are skipped; the curve
    needs values known before any sampler runs.
    """
    if config.sweep is None:
        raise ConfigError(["sweep: the config has no [sweep] section"])
    sweep = config.sweep
    model = get_model(config.model.id, **config.model.options)

    problem = build_problem(config, model)
    base = np.asarray(sweep.fixed if sweep.fixed is not None else config.model.theta_true, dtype=float)
    grid = np.linspace(sweep.low, sweep.high, sweep.points)
    exact = model.summary_loglik(float(problem.s_star[0])) if hasattr(model, "summary_loglik") else None
    out.mkdir(parents=True, exist_ok=True)

    written = []
    for index, stage in enumerate(config.stages):
        if stage.sampler not in ABC_MCMC:
            continue
        if not isinstance(stage.delta, float) or not (stage.sigma == "identity" or isinstance(stage.sigma, list)):
            logger.warning(f"[SWEEP] skipping stage {stage.name}: δ and Σ must be given explicitly")
            continue
        sigma = (
            ScalingMatrix.identity(model.n_s) if stage.sigma == "identity" else ScalingMatrix(np.asarray(stage.sigma))
        )
        estimator = make_estimator(problem, stage, sigma, make_stream(config.seed, Purpose.SWEEP, Purpose.INDEX, index))
        rng = make_stream(config.seed, Purpose.SWEEP, Purpose.SAMPLER, index)
        logger.info(f"[SWEEP] {stage.name}: {sweep.points} points × {sweep.reps} reps")
        on_point = (lambda k, n: progress(stage.name, k, n)) if progress is not None else None
        points = likelihood_curve(problem, estimator, grid, base, sweep.parameter, sweep.reps, rng, exact, on_point)
        path = out / f"likelihood_curve_{stage.name}.tsv"
        write_curve(path, points)
        written.append(path)
        if sweep.variance_reps is not None and stage.sampler in ("rs", "xrs"):
            ratio, discarded = averaged_variance_ratio(
                problem, base, stage.R1, stage.R2, estimator.spec, estimator.kernel, sweep.variance_reps,
                make_stream(config.seed, Purpose.SWEEP, Purpose.REPLICATE, index),
            )
            path = out / f"variance_ratio_{stage.name}.json"
            payload = {"theta": base.tolist(), "reps": sweep.variance_reps, "ratio": ratio, "discarded": discarded}
            path.write_text(json.dumps(payload, indent=2) + "\n")
            written.append(path)
    if not written:
        raise ConfigError(["sweep: no stage with an explicit δ and Σ to sweep"])
    return written
