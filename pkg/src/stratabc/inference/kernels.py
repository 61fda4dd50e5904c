"""Scaled summary distances and ABC kernels.

All functions accept either a single summary vector ``s`` of length ``n_s`` or
a batch of shape ``(R, n_s)``; batched inputs return one value per row.
"""

import numpy as np

from stratabc.exceptions import DimensionError, ParameterError
from stratabc.inference.models import ScalingMatrix


def _check_delta(delta: float) -> None:
    if not (np.isfinite(delta) and delta > 0):
        raise ParameterError(f"delta must be a positive finite number, got {delta}")


def scaled_distance(s_star: np.ndarray, s: np.ndarray, sigma: ScalingMatrix) -> np.ndarray | float:
    """√((s*−s)ᵀ Σ⁻¹ (s*−s)) for a diagonal Σ."""
    s_star = np.atleast_1d(np.asarray(s_star, dtype=float))
    s = np.asarray(s, dtype=float)
    batched = s.ndim == 2
    s2 = s if batched else np.atleast_1d(s)
    if s_star.ndim != 1 or s2.shape[-1] != s_star.shape[0] or sigma.n_s != s_star.shape[0]:
        raise DimensionError(
            f"summary length mismatch: s*={s_star.shape}, s={s.shape}, Σ={sigma.n_s}"
        )
    diff = s2 - s_star
    d = np.sqrt(np.sum(diff * diff / sigma.diag, axis=-1))
    return d if batched else float(d)


def log_gaussian_kernel_from_distance(d: np.ndarray | float, delta: float, n_s: int) -> np.ndarray | float:
    """log K_δ given scaled distances: −n_s·log δ − d²/(2δ²)."""
    _check_delta(delta)
    d = np.asarray(d, dtype=float)
    out = -n_s * np.log(delta) - d * d / (2.0 * delta * delta)
    return out if out.ndim else float(out)


def gaussian_kernel_from_distance(d: np.ndarray | float, delta: float, n_s: int) -> np.ndarray | float:
    """(1/δ^{n_s}) · exp(−d²/(2δ²))."""
    _check_delta(delta)
    d = np.asarray(d, dtype=float)
    out = np.exp(-d * d / (2.0 * delta * delta)) / delta**n_s
    return out if out.ndim else float(out)


def gaussian_kernel(
    s_star: np.ndarray, s: np.ndarray, sigma: ScalingMatrix, delta: float
) -> np.ndarray | float:
    """Unnormalised Gaussian ABC kernel, peak value 1/δ^{n_s} at s = s*."""
    _check_delta(delta)
    d = scaled_distance(s_star, s, sigma)
    return gaussian_kernel_from_distance(d, delta, sigma.n_s)


def log_gaussian_kernel(
    s_star: np.ndarray, s: np.ndarray, sigma: ScalingMatrix, delta: float
) -> np.ndarray | float:
    _check_delta(delta)
    d = scaled_distance(s_star, s, sigma)
    return log_gaussian_kernel_from_distance(d, delta, sigma.n_s)


def indicator_kernel(d: np.ndarray | float, delta: float) -> np.ndarray | float:
    """1 if d < δ else 0 (strict at the boundary)."""
    _check_delta(delta)
    d = np.asarray(d, dtype=float)
    if np.any(d < 0) or np.any(np.isnan(d)):
        raise ParameterError("distances must be nonnegative")
    out = (d < delta).astype(float)
    return out if out.ndim else float(out)


def log_indicator_kernel(d: np.ndarray | float, delta: float) -> np.ndarray | float:
    k = np.asarray(indicator_kernel(d, delta))
    with np.errstate(divide="ignore"):
        out = np.log(k)
    return out if out.ndim else float(out)


class KernelConfig:
    """Kernel choice bound to (s*, Σ, δ); evaluates kernels from distances.

    ``kind`` is ``"gaussian"`` or ``"indicator"``.
    """

    KINDS = ("gaussian", "indicator")

    def __init__(self, kind: str, s_star: np.ndarray, sigma: ScalingMatrix, delta: float):
        if kind not in self.KINDS:
            raise ParameterError(f"unknown kernel {kind!r}; expected one of {self.KINDS}")
        _check_delta(delta)
        self.kind = kind
        self.s_star = np.atleast_1d(np.asarray(s_star, dtype=float))
        self.sigma = sigma
        self.delta = float(delta)
        if self.sigma.n_s != self.s_star.shape[0]:
            raise DimensionError("Σ and s* lengths differ")

    def with_delta(self, delta: float) -> "KernelConfig":
        return KernelConfig(self.kind, self.s_star, self.sigma, delta)

    def with_sigma(self, sigma: ScalingMatrix) -> "KernelConfig":
        return KernelConfig(self.kind, self.s_star, sigma, self.delta)

    def distances(self, summaries: np.ndarray) -> np.ndarray:
        """Scaled distances of each summary row; non-finite summaries sit at +inf."""
        d = np.atleast_1d(scaled_distance(self.s_star, np.atleast_2d(summaries), self.sigma))
        return np.where(np.isnan(d), np.inf, d)

    def values(self, distances: np.ndarray) -> np.ndarray:
        if self.kind == "gaussian":
            return np.asarray(gaussian_kernel_from_distance(distances, self.delta, self.sigma.n_s))
        return np.asarray(indicator_kernel(distances, self.delta))

    def log_values(self, distances: np.ndarray) -> np.ndarray:
        if self.kind == "gaussian":
            return np.asarray(log_gaussian_kernel_from_distance(distances, self.delta, self.sigma.n_s))
        return np.asarray(log_indicator_kernel(distances, self.delta))
