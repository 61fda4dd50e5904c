"""Stochastic Lotka-Volterra predator-prey model simulated with Gillespie's
direct method and observed on a regular time grid.

Reactions (X1 predators, X2 prey):
    prey birth       X2 -> X2 + 1          hazard θ1·X2
    predation        X1 + 1, X2 - 1        hazard θ2·X1·X2
    predator death   X1 -> X1 - 1          hazard θ3·X1
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from numba import njit

from stratabc.config import get_settings
from stratabc.exceptions import ParameterError
from stratabc.inference.resampling import BlockScheme
from stratabc.simulators.base import Dataset, Simulator, UniformPrior
from stratabc.streams import RandomStream

logger = logging.getLogger(__name__)

INITIAL_STATE = (50, 100)
TRUE_THETA = (1.0, 0.005, 0.6)
OBSERVATION_STEP = 2.0
N_OBSERVATIONS = 32
T_MAX = 64.0
REACTION_CAP = 124_001
BLOCK_LENGTH = 8
LOG_PRIOR_BOUNDS = (-6.0, 2.0)
LOG_VARIANCE_FLOOR = 1e-12

Interpolation = Literal["constant", "linear"]


def lv_hazards(theta: np.ndarray, x1: int, x2: int) -> np.ndarray:
    th1, th2, th3 = (float(v) for v in theta)
    return np.array([th1 * x2, th2 * x1 * x2, th3 * x1])


@dataclass
class LVPath:
    """Event times and states (t_0 = 0 first) plus per-reaction counts."""

    times: np.ndarray
    states: np.ndarray
    counts: np.ndarray  # births, predations, deaths
    capped: bool = False

    @property
    def n_reactions(self) -> int:
        return int(self.times.shape[0] - 1)


@njit
def _gillespie(x1, x2, th1, th2, th3, t_max, cap, rg):
    capacity = 1024
    times = np.empty(capacity)
    states = np.empty((capacity, 2), dtype=np.int64)
    counts = np.zeros(3, dtype=np.int64)
    times[0] = 0.0
    states[0, 0] = x1
    states[0, 1] = x2
    t = 0.0
    n = 0
    capped = False
    while True:
        h1 = th1 * x2
        h2 = th2 * x1 * x2
        h3 = th3 * x1
        total = h1 + h2 + h3
        if total <= 0.0:
            break
        if n >= cap:
            capped = True
            break
        t += rg.exponential(1.0 / total)
        if t > t_max:
            break
        u = rg.random() * total
        if u < h1:
            x2 += 1
            counts[0] += 1
        elif u < h1 + h2:
            x1 += 1
            x2 -= 1
            counts[1] += 1
        else:
            x1 -= 1
            counts[2] += 1
        n += 1
        if n >= capacity:
            capacity *= 2
            grown_t = np.empty(capacity)
            grown_s = np.empty((capacity, 2), dtype=np.int64)
            grown_t[:n] = times[:n]
            grown_s[:n] = states[:n]
            times = grown_t
            states = grown_s
        times[n] = t
        states[n, 0] = x1
        states[n, 1] = x2
    return times[: n + 1].copy(), states[: n + 1].copy(), counts, capped


def lv_gillespie(
    theta: np.ndarray,
    x1_0: int,
    x2_0: int,
    rng: RandomStream,
    t_max: float = T_MAX,
    reaction_cap: Optional[int] = None,
) -> LVPath:
    """Exact SSA path until ``t_max`` or, with ``reaction_cap`` D, after D reactions.

    In ``t_max`` mode the settings' ``max_reactions`` bounds runaway paths.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (3,) or np.any(theta < 0):
        raise ParameterError(f"LV rates must be three nonnegative numbers, got {theta}")
    if x1_0 < 0 or x2_0 < 0:
        raise ParameterError("initial populations must be nonnegative")
    if reaction_cap is not None:
        horizon, cap = np.inf, int(reaction_cap)
    else:
        horizon, cap = float(t_max), int(get_settings().max_reactions)
    times, states, counts, capped = _gillespie(
        int(x1_0), int(x2_0), float(theta[0]), float(theta[1]), float(theta[2]), horizon, cap, rng
    )
    if capped and reaction_cap is None:
        logger.debug(f"[LV] reaction cap {cap} reached at t = {times[-1]:.3g} for θ = {theta}")
    return LVPath(times=times, states=states, counts=counts, capped=bool(capped and reaction_cap is None))


def observation_times(n_obs: int = N_OBSERVATIONS, step: float = OBSERVATION_STEP) -> np.ndarray:
    return step * np.arange(n_obs)


def lv_observe(path: LVPath, times: np.ndarray, mode: Interpolation = "constant") -> Dataset:
    """States at ``times``; after the last event the final state is carried forward."""
    times = np.asarray(times, dtype=float)
    if mode == "constant":
        idx = np.searchsorted(path.times, times, side="right") - 1
        return path.states[idx].astype(float)
    if mode == "linear":
        return np.column_stack(
            [np.interp(times, path.times, path.states[:, j].astype(float)) for j in range(2)]
        )
    raise ParameterError(f"unknown interpolation mode {mode!r}")


def _acf(centred: np.ndarray, ss: np.ndarray, lag: int) -> np.ndarray:
    num = np.sum(centred[..., lag:] * centred[..., :-lag], axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = num / ss
    return np.where(ss > 0, out, 0.0)


def lv_summaries(series: np.ndarray) -> np.ndarray:
    """Nine summaries of a ``(n_obs, 2)`` series (or a stack ``(R, n_obs, 2)``).

    Per series: mean, log sample variance, lag-1 and lag-2 autocorrelation
    (biased, divide-by-n); then the lag-0 cross-correlation. Zero variances
    give log ε and undefined correlations give 0.
    """
    x = np.asarray(series, dtype=float)
    single = x.ndim == 2
    if single:
        x = x[None]
    x = np.swapaxes(x, 1, 2)  # (R, 2, n_obs)
    means = np.mean(x, axis=-1)
    centred = x - means[..., None]
    ss = np.sum(centred * centred, axis=-1)
    var = ss / (x.shape[-1] - 1)
    log_var = np.log(np.maximum(var, LOG_VARIANCE_FLOOR))
    ac1 = _acf(centred, ss, 1)
    ac2 = _acf(centred, ss, 2)
    denom = np.sqrt(ss[:, 0] * ss[:, 1])
    cross_num = np.sum(centred[:, 0] * centred[:, 1], axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cross = np.where(denom > 0, cross_num / denom, 0.0)
    out = np.column_stack(
        [means[:, 0], log_var[:, 0], ac1[:, 0], ac2[:, 0],
         means[:, 1], log_var[:, 1], ac1[:, 1], ac2[:, 1], cross]
    )
    return out[0] if single else out


class LotkaVolterra(Simulator):
    """Predator-prey SSA observed every 2 time units, sampled on log rates."""

    name = "lotka_volterra"
    parameter_names = ("theta1", "theta2", "theta3")
    log_scale = (True, True, True)
    n_s = 9

    def __init__(
        self,
        initial_state: tuple[int, int] = INITIAL_STATE,
        n_obs: int = N_OBSERVATIONS,
        step: float = OBSERVATION_STEP,
        t_max: float = T_MAX,
        reaction_cap: Optional[int] = None,
        interpolation: Interpolation = "constant",
        block_length: int = BLOCK_LENGTH,
        overlapping: bool = False,
        log_bounds: tuple[float, float] = LOG_PRIOR_BOUNDS,
    ):
        lo, hi = log_bounds
        super().__init__(
            UniformPrior([lo] * 3, [hi] * 3),
            BlockScheme("time_blocks", block_length=block_length, overlapping=overlapping),
        )
        self.initial_state = initial_state
        self.times = observation_times(n_obs, step)
        if self.times[-1] > t_max:
            raise ParameterError("the last observation time lies beyond t_max")
        self.t_max = t_max
        self.reaction_cap = reaction_cap
        self.interpolation = interpolation

    @property
    def data_dims(self) -> int:
        return int(self.times.shape[0])

    def path(self, theta: np.ndarray, rng: RandomStream) -> LVPath:
        x1, x2 = self.initial_state
        return lv_gillespie(theta, x1, x2, rng, t_max=self.t_max, reaction_cap=self.reaction_cap)

    def simulate(self, theta: np.ndarray, rng: RandomStream) -> Dataset:
        return lv_observe(self.path(theta, rng), self.times, self.interpolation)

    def summarize(self, x: Dataset) -> np.ndarray:
        return lv_summaries(x)

    def summarize_batch(self, xs: np.ndarray) -> np.ndarray:
        return lv_summaries(np.asarray(xs, dtype=float))
