"""Chain and posterior diagnostics: IAT, ESS, 1-D Wasserstein distance,
posterior summaries and efficiency ratios."""

import logging
import math

import numpy as np
from scipy import fft, stats

from stratabc.exceptions import DegeneracyError, ParameterError
from stratabc.inference.models import Chain
from stratabc.schemas.artifacts import ChainDiagnostics, PosteriorSummary

logger = logging.getLogger(__name__)

MIN_IAT_LENGTH = 10
MIN_SUMMARY_LENGTH = 40


def autocorrelation(series: np.ndarray) -> np.ndarray:
    """Biased sample autocorrelation at every lag, via zero-padded FFT."""
    x = np.asarray(series, dtype=float)
    n = x.shape[0]
    centred = x - np.mean(x)
    size = fft.next_fast_len(2 * n)
    spectrum = fft.rfft(centred, n=size)
    acov = fft.irfft(spectrum * np.conjugate(spectrum), n=size)[:n] / n
    if not acov[0] > 0:
        raise DegeneracyError("autocorrelation of a constant series")
    return acov / acov[0]


def iat(series: np.ndarray) -> float:
    """Integrated autocorrelation time with Geyer's initial positive (monotone) sequence.

    Values below 1 (anti-correlated chains) are clipped to 1.
    """
    x = np.asarray(series, dtype=float).ravel()
    if x.shape[0] < MIN_IAT_LENGTH:
        raise ParameterError(f"IAT needs at least {MIN_IAT_LENGTH} draws, got {x.shape[0]}")
    if np.ptp(x) == 0:
        raise DegeneracyError("IAT of a constant series")
    rho = autocorrelation(x)
    n_pairs = rho.shape[0] // 2
    pairs = rho[: 2 * n_pairs : 2] + rho[1 : 2 * n_pairs : 2]
    negative = np.flatnonzero(pairs < 0)
    pairs = pairs[: negative[0]] if negative.size else pairs
    pairs = np.minimum.accumulate(pairs)
    tau = -1.0 + 2.0 * float(np.sum(pairs))
    return max(1.0, tau)


def ess_from_iat(n_retained: int, iat_value: float) -> float:
    if iat_value < 1:
        raise ParameterError(f"IAT must be at least 1, got {iat_value}")
    return n_retained / iat_value


def wasserstein_1d(a: np.ndarray, b: np.ndarray) -> float:
    """L1 distance between the quantile functions of two samples."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ParameterError("Wasserstein distance of an empty sample")
    if a.size == b.size:
        return float(np.mean(np.abs(np.sort(a) - np.sort(b))))
    return float(stats.wasserstein_distance(a, b))


def posterior_summary(draws: np.ndarray) -> tuple[float, float, float]:
    """(mean, 2.5%, 97.5%); the bounds are the k-th smallest and k-th largest
    draw with k = ceil(0.025·n)."""
    x = np.sort(np.asarray(draws, dtype=float).ravel())
    if x.size < MIN_SUMMARY_LENGTH:
        raise ParameterError(f"posterior summary needs at least {MIN_SUMMARY_LENGTH} draws, got {x.size}")
    k = max(1, math.ceil(0.025 * x.size))
    return float(np.mean(x)), float(x[k - 1]), float(x[x.size - k])


def weighted_posterior_summary(values: np.ndarray, weights: np.ndarray) -> tuple[float, float, float]:
    """Weighted mean and 2.5%/97.5% points of the weighted empirical CDF."""
    x = np.asarray(values, dtype=float).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if x.size == 0 or x.shape != w.shape or not np.sum(w) > 0:
        raise ParameterError("weighted summary needs matching values and positive weights")
    order = np.argsort(x, kind="stable")
    x, w = x[order], w[order] / np.sum(w)
    cdf = np.cumsum(w)
    lo = x[min(np.searchsorted(cdf, 0.025, side="left"), x.size - 1)]
    hi = x[min(np.searchsorted(cdf, 0.975, side="left"), x.size - 1)]
    return float(np.sum(w * x)), float(lo), float(hi)


def diagnose_chain(chain: Chain) -> ChainDiagnostics:
    """IAT/ESS per coordinate, worst values and posterior summaries after burn-in."""
    draws = chain.retained()
    n = draws.shape[0]
    names = list(chain.parameter_names) or [f"theta{j}" for j in range(draws.shape[1])]
    iats: list[float] = []
    for j, name in enumerate(names):
        try:
            iats.append(iat(draws[:, j]))
        except DegeneracyError:
            logger.warning(f"[DIAG] {name} never moved after burn-in; IAT set to the chain length")
            iats.append(float(max(n, 1)))
    esss = [ess_from_iat(n, v) for v in iats]
    worst_ess = min(esss) if esss else 0.0
    posterior = []
    if n >= MIN_SUMMARY_LENGTH:
        for j, name in enumerate(names):
            mean, lo, hi = posterior_summary(draws[:, j])
            posterior.append(PosteriorSummary(name=name, mean=mean, lower=lo, upper=hi))
    finite_delta = chain.delta[np.isfinite(chain.delta)] if len(chain) else np.array([])
    return ChainDiagnostics(
        parameter_names=names,
        iat=iats,
        ess=esss,
        worst_iat=max(iats) if iats else 1.0,
        worst_ess=worst_ess,
        acceptance_rate=chain.acceptance_rate,
        evaluated_acceptance_rate=chain.evaluated_acceptance_rate,
        wall_time=chain.wall_time,
        ess_per_minute=worst_ess / (chain.wall_time / 60.0) if chain.wall_time > 0 else None,
        n_retained=n,
        posterior=posterior,
        final_delta=float(finite_delta[-1]) if finite_delta.size else None,
        sigma=chain.sigma.to_list() if chain.sigma is not None else None,
    )


def efficiency_ratio(numerator: ChainDiagnostics, denominator: ChainDiagnostics) -> float:
    """Ratio of ESS per minute between two runs."""
    if not numerator.ess_per_minute or not denominator.ess_per_minute:
        raise ParameterError("both runs need a positive ESS per minute")
    return numerator.ess_per_minute / denominator.ess_per_minute
