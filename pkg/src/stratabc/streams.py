"""Seeded, splittable random streams.

Every experiment declares one master seed. Streams for distinct purposes are
derived from it through ``SeedSequence`` spawn keys and drive a counter-based
``Philox`` bit generator, so a stream's numbers never depend on how many
numbers another stream consumed.
"""

from enum import IntEnum

import numpy as np

RandomStream = np.random.Generator


class Purpose(IntEnum):
    """Fixed spawn-key prefixes for the stream families an experiment uses."""

    OBSERVED = 1
    PILOT = 2
    INDEX = 3
    SAMPLER = 4
    SWEEP = 5
    REPLICATE = 6


def make_stream(seed: int, *keys: int) -> RandomStream:
    """Return the generator for ``(seed, *keys)``.

    The same arguments always yield a generator in the same state.
    """
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    seq = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(seq))


def spawn(rng: RandomStream, n: int) -> list[RandomStream]:
    """Split ``rng`` into ``n`` independent child streams."""
    return [np.random.Generator(bg) for bg in rng.bit_generator.spawn(n)]
