"""Gaussian random-walk proposals with Haario-style covariance adaptation."""

import logging

import numpy as np

from stratabc.exceptions import DimensionError, ParameterError
from stratabc.inference.models import ProposalState
from stratabc.streams import RandomStream

logger = logging.getLogger(__name__)

# Optimal random-walk scaling for Gaussian targets
HAARIO_SCALE = 2.38**2


def _cholesky(cov: np.ndarray) -> np.ndarray | None:
    if not np.all(np.isfinite(cov)):
        return None
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        return None


def adapted_covariance(history: np.ndarray, jitter: float) -> np.ndarray:
    """2.38²/p · Cov(history) + jitter·I."""
    h = np.asarray(history, dtype=float)
    if h.ndim == 1:
        h = h[:, None]
    p = h.shape[1]
    emp = np.atleast_2d(np.cov(h, rowvar=False))
    return HAARIO_SCALE / p * emp + jitter * np.eye(p)


class RandomWalkProposal:
    """Symmetric Gaussian random walk on the sampling scale.

    With ``state.adapt`` the covariance is recomputed from the chain history
    every ``state.adapt_period`` iterations; a non-SPD estimate keeps the
    previous covariance.
    """

    def __init__(self, state: ProposalState):
        chol = _cholesky(state.covariance)
        if chol is None:
            raise ParameterError("initial proposal covariance is not symmetric positive definite")
        self.state = state
        self._chol = chol

    @property
    def covariance(self) -> np.ndarray:
        return self.state.covariance

    def propose(self, phi: np.ndarray, rng: RandomStream) -> np.ndarray:
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        if phi.shape[0] != self.state.p:
            raise DimensionError(f"parameter of length {phi.shape[0]} for a {self.state.p}-D proposal")
        return phi + self._chol @ rng.standard_normal(self.state.p)

    def refresh(self, history: np.ndarray) -> bool:
        """Recompute the covariance from ``history``; False when it fell back."""
        if len(history) < 2:
            return False
        cov = adapted_covariance(history, self.state.jitter)
        chol = _cholesky(cov)
        if chol is None:
            logger.warning("[PROPOSAL] adapted covariance is not SPD, keeping the previous one")
            return False
        self.state.covariance = cov
        self._chol = chol
        return True

    def maybe_adapt(self, iteration: int, history: np.ndarray) -> bool:
        s = self.state
        if not s.adapt or iteration < max(s.start_adapting, 1) or iteration % s.adapt_period:
            return False
        return self.refresh(history)


def adaptive_propose(
    state: ProposalState,
    theta: np.ndarray,
    rng: RandomStream,
    history: np.ndarray | None = None,
    iteration: int = 0,
) -> np.ndarray:
    """One random-walk draw around ``theta``.

    When a chain ``history`` is given and ``iteration`` falls on the
    adaptation period, ``state.covariance`` is refreshed first.
    """
    proposal = RandomWalkProposal(state)
    if history is not None:
        proposal.maybe_adapt(iteration, history)
    return proposal.propose(theta, rng)
