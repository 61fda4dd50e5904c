"""Ising model on an L×L torus: interaction statistic, Gibbs simulator and
the exchange algorithm used as the reference sampler."""

from __future__ import annotations

import logging
import time
from typing import Optional

import numpy as np
from numba import njit

from stratabc.exceptions import ParameterError, StartupError
from stratabc.inference.models import Chain, ProposalState
from stratabc.inference.proposals import RandomWalkProposal
from stratabc.inference.resampling import BlockScheme
from stratabc.inference.samplers import ProgressCallback, mh_accept
from stratabc.simulators.base import Dataset, Simulator, UniformPrior
from stratabc.streams import RandomStream

logger = logging.getLogger(__name__)

GRID_SIZE = 100
SIMULATION_SWEEPS = 50
OBSERVED_SWEEPS = 1000
TILE = (20, 20)
TRUE_THETA = 0.3
PRIOR_BOUNDS = (0.0, 3.0)


def _check_spins(grid: np.ndarray) -> None:
    if not np.all(np.abs(grid) == 1):
        raise ParameterError("spin grids may only hold -1 and +1")


def ising_statistic(grid: np.ndarray) -> int | np.ndarray:
    """S(x) = Σ_k Σ_{neighbours ℓ of k} x_k·x_ℓ with 4-neighbourhoods on the torus.

    Every edge is counted twice. A stack of grids ``(R, L, L)`` gives one value per grid.
    """
    x = np.asarray(grid)
    _check_spins(x)
    x = x.astype(np.int64)
    a, b = x.ndim - 2, x.ndim - 1
    neighbours = np.roll(x, 1, a) + np.roll(x, -1, a) + np.roll(x, 1, b) + np.roll(x, -1, b)
    s = np.sum(x * neighbours, axis=(a, b))
    return int(s) if np.ndim(s) == 0 else s


@njit
def _gibbs_sweeps(grid, theta, sweeps, rg):
    L, W = grid.shape
    for _ in range(sweeps):
        for i in range(L):
            up = (i - 1 + L) % L
            down = (i + 1) % L
            for j in range(W):
                nb = grid[up, j] + grid[down, j] + grid[i, (j - 1 + W) % W] + grid[i, (j + 1) % W]
                p_plus = 1.0 / (1.0 + np.exp(-2.0 * theta * nb))
                grid[i, j] = 1 if rg.random() < p_plus else -1
    return grid


def gibbs_sweeps(grid: np.ndarray, theta: float, sweeps: int, rng: RandomStream) -> np.ndarray:
    """Raster-scan Gibbs updates P(x_k=+1|rest) = 1/(1+exp(-2θ·neighbour sum)), in place."""
    if sweeps < 1:
        raise ParameterError(f"sweeps must be at least 1, got {sweeps}")
    _check_spins(grid)
    return _gibbs_sweeps(grid, float(theta), int(sweeps), rng)


def ising_simulate(theta: float, sweeps: int, rng: RandomStream, L: int = GRID_SIZE) -> Dataset:
    """Grid after ``sweeps`` Gibbs passes from a uniformly random start."""
    grid = np.where(rng.random((L, L)) < 0.5, -1, 1).astype(np.int8)
    return gibbs_sweeps(grid, theta, sweeps, rng)


class IsingModel(Simulator):
    """Ising model with summary S(x); tiles of ``tile`` spins are the bootstrap units."""

    name = "ising"
    parameter_names = ("theta",)
    log_scale = (False,)
    n_s = 1

    def __init__(
        self,
        L: int = GRID_SIZE,
        sweeps: int = SIMULATION_SWEEPS,
        observed_sweeps: int = OBSERVED_SWEEPS,
        tile: tuple[int, int] = TILE,
        prior_bounds: tuple[float, float] = PRIOR_BOUNDS,
    ):
        super().__init__(UniformPrior([prior_bounds[0]], [prior_bounds[1]]), BlockScheme("grid_blocks", block_shape=tuple(tile)))
        self.L = L
        self.sweeps = sweeps
        self.observed_sweeps = observed_sweeps

    @property
    def data_dims(self) -> tuple[int, int]:
        return (self.L, self.L)

    def simulate(self, theta: np.ndarray, rng: RandomStream) -> Dataset:
        return ising_simulate(float(np.ravel(theta)[0]), self.sweeps, rng, self.L)

    def observe(self, theta: np.ndarray, rng: RandomStream) -> Dataset:
        return ising_simulate(float(np.ravel(theta)[0]), self.observed_sweeps, rng, self.L)

    def summarize(self, x: Dataset) -> np.ndarray:
        return np.array([float(ising_statistic(x))])

    def summarize_batch(self, xs: np.ndarray) -> np.ndarray:
        return np.asarray(ising_statistic(np.asarray(xs)), dtype=float).reshape(-1, 1)


def ising_exchange_sampler(
    model: IsingModel,
    x_star: np.ndarray,
    n_iter: int,
    init_theta: float,
    rng: RandomStream,
    *,
    proposal: ProposalState,
    burn_in: int = 0,
    progress: Optional[ProgressCallback] = None,
) -> Chain:
    """Exchange algorithm for θ.

    The simulator's stationary law is exp(θ·S/2)/Z(θ), so with an auxiliary
    grid x' ~ f(·|θ') the partition functions cancel and the log acceptance
    ratio is (θ'−θ)(S(x*) − S(x'))/2 plus the prior ratio.
    """
    prior = model.prior
    s_obs = float(ising_statistic(x_star))
    current = np.array([float(init_theta)])
    current_lp = prior.logpdf(current)
    if not np.isfinite(current_lp):
        raise StartupError("exchange: initial θ lies outside the prior support")
    walk = RandomWalkProposal(proposal)

    history = np.empty((n_iter + 1, 1))
    history[0] = current
    accepted_flags = np.zeros(n_iter, dtype=bool)
    start = time.perf_counter()
    for t in range(1, n_iter + 1):
        walk.maybe_adapt(t, history[:t])
        candidate = walk.propose(current, rng)
        lp_new = prior.logpdf(candidate)
        accepted = False
        if np.isfinite(lp_new):
            s_aux = float(ising_statistic(model.simulate(candidate, rng)))
            log_ratio = (candidate[0] - current[0]) * (s_obs - s_aux) / 2.0
            # the exchange ratio plays the role of the likelihood ratio
            accepted = mh_accept(log_ratio, lp_new, 0.0, current_lp, rng)
        if accepted:
            current, current_lp = candidate, lp_new
        history[t] = current
        accepted_flags[t - 1] = accepted
        if progress is not None:
            progress(t, n_iter)
    wall_time = time.perf_counter() - start

    chain = Chain(
        phi=history[1:],
        theta=history[1:].copy(),
        log_likelihood=np.full(n_iter, np.nan),
        accepted=accepted_flags,
        delta=np.full(n_iter, np.nan),
        parameter_names=model.parameter_names,
        sampler="exchange",
        burn_in=burn_in,
        proposal=walk.state,
        wall_time=wall_time,
    )
    logger.info(f"[EXCHANGE] {n_iter} iterations, acceptance {chain.acceptance_rate:.3f}")
    return chain
