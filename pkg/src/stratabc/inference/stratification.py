"""ABC likelihood estimators.

Plain Monte Carlo, bootstrapped (resampled), stratified with known strata
probabilities, post-stratified with training/testing sets, and the averaged
estimator that exchanges the two sets. Every estimator that feeds a sampler
also has a log-domain twin built on ``scipy.special.logsumexp``.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.special import logsumexp

from stratabc.exceptions import DimensionError, ParameterError
from stratabc.inference.kernels import KernelConfig, indicator_kernel, scaled_distance
from stratabc.inference.models import LikelihoodEstimate, ScalingMatrix, StrataEstimate, StrataSpec

logger = logging.getLogger(__name__)

NEG_INF = float("-inf")


def _kernel_vector(kernel_values: np.ndarray) -> np.ndarray:
    k = np.atleast_1d(np.asarray(kernel_values, dtype=float))
    if k.size == 0:
        raise ParameterError("at least one kernel value is required")
    if np.any(k < 0) or np.any(np.isnan(k)):
        raise ParameterError("kernel values must be nonnegative")
    return k


def mc_likelihood(kernel_values: np.ndarray) -> float:
    """Arithmetic mean of M kernel values."""
    k = _kernel_vector(kernel_values)
    return float(np.sum(k) / k.size)


def res_likelihood(kernel_values: np.ndarray) -> float:
    """Mean kernel over R resampled datasets (weights 1/R)."""
    k = _kernel_vector(kernel_values)
    return float(np.sum(k) / k.size)


def log_mean_kernel(log_kernel_values: np.ndarray) -> float:
    """log of the mean kernel, from log-kernel values."""
    lk = np.atleast_1d(np.asarray(log_kernel_values, dtype=float))
    if lk.size == 0:
        raise ParameterError("at least one kernel value is required")
    with np.errstate(divide="ignore"):
        return float(logsumexp(lk) - np.log(lk.size))


def strat_likelihood_known(omega: np.ndarray, per_stratum_kernel_values: list[np.ndarray]) -> float:
    """Σ_j (ω_j/ñ_j) Σ_i f(x_ij) with draws made conditionally inside each stratum."""
    omega = np.asarray(omega, dtype=float)
    if omega.shape[0] != len(per_stratum_kernel_values):
        raise DimensionError("one vector of kernel values is needed per stratum")
    if np.any(omega < 0) or not np.isclose(np.sum(omega), 1.0):
        raise ParameterError("ω must be a probability vector")
    total = 0.0
    for j, values in enumerate(per_stratum_kernel_values):
        values = np.atleast_1d(np.asarray(values, dtype=float))
        if values.size == 0:
            raise ParameterError(f"stratum {j} has no draws")
        total += omega[j] * np.sum(values) / values.size
    return float(total)


def estimate_strata_probs(distances: np.ndarray, spec: StrataSpec) -> np.ndarray:
    """ω̂_j = share of training distances in stratum j; the last is the complement."""
    d = np.atleast_1d(np.asarray(distances, dtype=float))
    if d.size == 0:
        raise ParameterError("at least one training distance is required")
    counts = np.bincount(spec.assign(d), minlength=spec.J)
    omega = np.empty(spec.J)
    omega[:-1] = counts[:-1] / d.size
    omega[-1] = 1.0 - np.sum(omega[:-1])
    return omega


def count_and_sum_strata(
    distances: np.ndarray, kernel_values: np.ndarray, spec: StrataSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Testing counts n_j and per-stratum kernel sums."""
    d = np.atleast_1d(np.asarray(distances, dtype=float))
    k = np.atleast_1d(np.asarray(kernel_values, dtype=float))
    if d.shape != k.shape:
        raise DimensionError(f"distances {d.shape} and kernel values {k.shape} differ in length")
    labels = spec.assign(d)
    n = np.bincount(labels, minlength=spec.J)
    sums = np.array([np.sum(k[labels == j]) for j in range(spec.J)], dtype=float)
    return n, sums


def count_and_logsum_strata(
    distances: np.ndarray, log_kernel_values: np.ndarray, spec: StrataSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Log-domain twin of :func:`count_and_sum_strata`."""
    d = np.atleast_1d(np.asarray(distances, dtype=float))
    lk = np.atleast_1d(np.asarray(log_kernel_values, dtype=float))
    if d.shape != lk.shape:
        raise DimensionError(f"distances {d.shape} and kernel values {lk.shape} differ in length")
    labels = spec.assign(d)
    n = np.bincount(labels, minlength=spec.J)
    log_sums = np.full(spec.J, NEG_INF)
    with np.errstate(divide="ignore"):
        for j in range(spec.J):
            if n[j]:
                log_sums[j] = logsumexp(lk[labels == j])
    return n, log_sums


def strat_likelihood(omega_hat: np.ndarray, n: np.ndarray, kernel_sums: np.ndarray) -> LikelihoodEstimate:
    """Post-stratified estimate; zero with ``neglected_stratum`` when any n_j = 0."""
    omega_hat = np.asarray(omega_hat, dtype=float)
    n = np.asarray(n)
    kernel_sums = np.asarray(kernel_sums, dtype=float)
    if not (omega_hat.shape == n.shape == kernel_sums.shape):
        raise DimensionError("ω̂, n and kernel sums must share the number of strata")
    if np.any(n == 0):
        return LikelihoodEstimate.rejected()
    value = float(np.sum((omega_hat * kernel_sums) / n))
    return LikelihoodEstimate(value=value)


def log_strat_likelihood(
    omega_hat: np.ndarray, n: np.ndarray, log_kernel_sums: np.ndarray
) -> LikelihoodEstimate:
    """Log-domain post-stratified estimate; the linear value may underflow to 0."""
    omega_hat = np.asarray(omega_hat, dtype=float)
    n = np.asarray(n)
    log_kernel_sums = np.asarray(log_kernel_sums, dtype=float)
    if not (omega_hat.shape == n.shape == log_kernel_sums.shape):
        raise DimensionError("ω̂, n and kernel sums must share the number of strata")
    if np.any(n == 0):
        return LikelihoodEstimate.rejected()
    with np.errstate(divide="ignore"):
        terms = np.log(omega_hat) + log_kernel_sums - np.log(n)
        log_value = float(logsumexp(terms))
    return LikelihoodEstimate(value=float(np.exp(log_value)), log_value=log_value)


def post_stratified(
    train_distances: np.ndarray,
    test_distances: np.ndarray,
    test_log_kernels: np.ndarray,
    spec: StrataSpec,
) -> tuple[LikelihoodEstimate, StrataEstimate]:
    """ω̂ from the training set, counts and kernel sums from the testing set."""
    omega_hat = estimate_strata_probs(train_distances, spec)
    n, log_sums = count_and_logsum_strata(test_distances, test_log_kernels, spec)
    estimate = log_strat_likelihood(omega_hat, n, log_sums)
    with np.errstate(over="ignore"):
        sums = np.exp(log_sums)
    return estimate, StrataEstimate(omega_hat=omega_hat, n=n, kernel_sums=sums)


def averaged_from_distances(
    train_distances: np.ndarray,
    test_distances: np.ndarray,
    kernel: KernelConfig,
    spec: StrataSpec,
) -> tuple[LikelihoodEstimate, StrataEstimate]:
    """Mean of the two post-stratified estimates obtained by swapping the sets.

    A neglected stratum in either component rejects the whole estimate.
    """
    first, strata = post_stratified(train_distances, test_distances, kernel.log_values(test_distances), spec)
    if first.neglected_stratum:
        return first, strata
    second, _ = post_stratified(test_distances, train_distances, kernel.log_values(train_distances), spec)
    if second.neglected_stratum:
        return second, strata
    log_value = float(np.logaddexp(first.log_value, second.log_value) - np.log(2.0))
    value = 0.5 * (first.value + second.value)
    return LikelihoodEstimate(value=value, log_value=log_value), strata


def averaged_strat_likelihood(
    train_summaries: np.ndarray,
    test_summaries: np.ndarray,
    spec: StrataSpec,
    kernel: KernelConfig,
) -> LikelihoodEstimate:
    """Exchanged-samples averaged stratified likelihood from two summary sets."""
    train_d = kernel.distances(train_summaries)
    test_d = kernel.distances(test_summaries)
    estimate, _ = averaged_from_distances(train_d, test_d, kernel, spec)
    return estimate


def indicator_strat_collapse_check(
    summaries: np.ndarray,
    s_star: np.ndarray,
    sigma: ScalingMatrix,
    spec: StrataSpec,
    delta: float,
) -> tuple[float, float]:
    """Stratified and plain Monte Carlo estimates under the indicator kernel.

    ω̂ and the counts both come from ``summaries``; strata with ω̂_j = 0 then
    have n_j = 0 and contribute nothing, and the stratified value reduces to
    the fraction of draws inside δ.
    """
    d = np.atleast_1d(scaled_distance(s_star, np.atleast_2d(summaries), sigma))
    k = np.asarray(indicator_kernel(d, delta))
    omega_hat = estimate_strata_probs(d, spec)
    n, sums = count_and_sum_strata(d, k, spec)
    hit = n > 0
    strat = float(np.sum(omega_hat[hit] * sums[hit] / n[hit]))
    return strat, mc_likelihood(k)
