"""Self-tuning of the ABC threshold δ and the scaling matrix Σ."""

import logging
import math

import numpy as np
from scipy.stats import median_abs_deviation

from stratabc.config import get_settings
from stratabc.exceptions import DimensionError, ParameterError
from stratabc.inference.models import ScalingMatrix, ThresholdSchedule

logger = logging.getLogger(__name__)

# Share of the R distances that must already fall below δ_t before δ may shrink
MIN_INSIDE_FRACTION = 0.05


def nearest_rank(values: np.ndarray, q: float) -> float:
    """q-th percentile as the ceil(q/100·n)-th order statistic (at least the first)."""
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise ParameterError("percentile of an empty sample")
    if not 0 <= q <= 100:
        raise ParameterError(f"percentile must be in [0, 100], got {q}")
    rank = max(1, math.ceil(q / 100.0 * x.size))
    return float(np.partition(x, rank - 1)[rank - 1])


def tune_initial_delta(distances: np.ndarray, psi: float) -> float:
    """δ_0 = ψ-percentile of the distances computed with Σ = I."""
    return nearest_rank(distances, psi)


def update_sigma_mad(all_summaries: np.ndarray, floor: float | None = None) -> ScalingMatrix:
    """Diagonal Σ of squared raw MADs per summary column, floored at ε."""
    s = np.asarray(all_summaries, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    if s.ndim != 2:
        raise DimensionError(f"summaries must form a matrix, got shape {s.shape}")
    if s.shape[0] < 2:
        raise ParameterError("at least two summary rows are needed for a MAD")
    eps = get_settings().mad_floor if floor is None else floor
    mad = median_abs_deviation(s, axis=0, scale=1.0)
    return ScalingMatrix(np.maximum(mad * mad, eps))


def maybe_reduce_delta(
    schedule: ThresholdSchedule,
    accepted: bool,
    distances: np.ndarray,
    psi: float | None = None,
    iteration: int = 0,
) -> ThresholdSchedule:
    """Shrink δ_t to min(δ_t, d_ψ) when the proposal was accepted and at
    least 5% of the current R distances are already below δ_t."""
    if not accepted:
        return schedule
    d = np.asarray(distances, dtype=float)
    inside = int(np.count_nonzero(d < schedule.delta))
    if inside < MIN_INSIDE_FRACTION * d.size:
        return schedule
    d_psi = nearest_rank(d, schedule.psi if psi is None else psi)
    if d_psi < schedule.delta:
        logger.debug(f"[THRESHOLD] iteration {iteration}: δ {schedule.delta:.6g} -> {d_psi:.6g}")
        schedule.record(iteration, d_psi)
    return schedule
