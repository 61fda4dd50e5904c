"""Bootstrap index matrices and dataset reconstruction.

Datasets are plain arrays: a scalar sample has shape ``(n_obs,)``, a set of
time series shape ``(n_obs, n_series)`` (rows are observation times) and a
spin grid shape ``(L, W)``. Index matrices hold 0-based unit indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from stratabc.exceptions import ConfigError, DimensionError, ParameterError
from stratabc.streams import RandomStream

SchemeKind = Literal["iid", "time_blocks", "grid_blocks"]


@dataclass(frozen=True)
class BlockScheme:
    """How a dataset is cut into resampling units.

    iid: every observation is a unit.
    time_blocks: contiguous blocks of ``block_length`` rows; with
        ``overlapping`` every start position 0..n_obs-B is a candidate.
    grid_blocks: non-overlapping ``block_shape`` tiles placed back in raster order.
    """

    kind: SchemeKind = "iid"
    block_length: int = 1
    block_shape: tuple[int, int] = (1, 1)
    overlapping: bool = False

    def validate(self, dims: int | tuple[int, ...]) -> list[str]:
        """Every reason the scheme cannot be applied to data of shape ``dims``."""
        errors: list[str] = []
        shape = (dims,) if isinstance(dims, (int, np.integer)) else tuple(dims)
        if self.kind == "iid":
            if shape[0] < 1:
                errors.append("iid resampling needs at least one observation")
        elif self.kind == "time_blocks":
            n_obs = shape[0]
            B = self.block_length
            if B < 1:
                errors.append(f"block length must be positive, got {B}")
            elif B > n_obs:
                errors.append(f"block length {B} exceeds the series length {n_obs}")
            elif not self.overlapping and n_obs % B != 0:
                errors.append(
                    f"block length {B} does not divide the series length {n_obs} "
                    "(non-overlapping blocks)"
                )
        elif self.kind == "grid_blocks":
            if len(shape) != 2:
                errors.append(f"grid blocks need a 2-D grid, got shape {shape}")
            else:
                h, w = self.block_shape
                if h < 1 or w < 1:
                    errors.append(f"tile shape must be positive, got {self.block_shape}")
                elif shape[0] % h or shape[1] % w:
                    errors.append(f"tile shape {self.block_shape} does not divide grid {shape}")
        else:
            errors.append(f"unknown resampling scheme {self.kind!r}")
        return errors

    def check(self, dims: int | tuple[int, ...]) -> None:
        errors = self.validate(dims)
        if errors:
            raise ConfigError(errors)

    def slots(self, dims: int | tuple[int, ...]) -> int:
        """Number of units gathered per resample (row length of the index matrix)."""
        shape = (dims,) if isinstance(dims, (int, np.integer)) else tuple(dims)
        if self.kind == "iid":
            return shape[0]
        if self.kind == "time_blocks":
            return -(-shape[0] // self.block_length)
        h, w = self.block_shape
        return (shape[0] // h) * (shape[1] // w)

    def candidates(self, dims: int | tuple[int, ...]) -> int:
        """Size of the unit set each index is drawn from."""
        shape = (dims,) if isinstance(dims, (int, np.integer)) else tuple(dims)
        if self.kind == "time_blocks":
            if self.overlapping:
                return shape[0] - self.block_length + 1
            return shape[0] // self.block_length
        return self.slots(dims)


def make_index_matrix(
    scheme: BlockScheme, dims: int | tuple[int, ...], R: int, rng: RandomStream
) -> np.ndarray:
    """R × slots matrix of unit indices drawn uniformly with replacement."""
    if R < 1:
        raise ParameterError(f"number of resamples must be at least 1, got {R}")
    scheme.check(dims)
    return rng.integers(0, scheme.candidates(dims), size=(R, scheme.slots(dims)), dtype=np.int64)


def _time_positions(scheme: BlockScheme, rows: np.ndarray, n_obs: int) -> np.ndarray:
    B = scheme.block_length
    starts = rows if scheme.overlapping else rows * B
    pos = (starts[..., None] + np.arange(B)).reshape(*rows.shape[:-1], -1)
    return pos[..., :n_obs]


def _tiles(x: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    h, w = shape
    L, W = x.shape
    return x.reshape(L // h, h, W // w, w).transpose(0, 2, 1, 3).reshape(-1, h, w)


def resample_dataset(x_star: np.ndarray, row: np.ndarray, scheme: BlockScheme) -> np.ndarray:
    """Rebuild one dataset of the same shape as ``x_star`` from an index row."""
    x_star = np.asarray(x_star)
    row = np.asarray(row, dtype=np.int64)
    if row.ndim != 1 or row.shape[0] != scheme.slots(x_star.shape):
        raise DimensionError(
            f"index row of length {row.shape} does not match {scheme.slots(x_star.shape)} slots"
        )
    return resample_batch(x_star, row[None, :], scheme)[0]


def resample_batch(x_star: np.ndarray, u: np.ndarray, scheme: BlockScheme) -> np.ndarray:
    """Apply every row of ``u``; returns shape ``(R, *x_star.shape)``.

    Time blocks gather the same rows of every series, so paired series keep
    their cross-dependence.
    """
    x_star = np.asarray(x_star)
    u = np.asarray(u, dtype=np.int64)
    if u.ndim != 2:
        raise DimensionError(f"index matrix must be 2-D, got shape {u.shape}")
    if scheme.kind == "iid":
        return x_star[u]
    if scheme.kind == "time_blocks":
        return x_star[_time_positions(scheme, u, x_star.shape[0])]
    L, W = x_star.shape
    h, w = scheme.block_shape
    gathered = _tiles(x_star, scheme.block_shape)[u]
    R = u.shape[0]
    return gathered.reshape(R, L // h, W // w, h, w).transpose(0, 1, 3, 2, 4).reshape(R, L, W)
