"""Counter-based random streams built on numpy's Philox generator.

Every random draw in this package is addressed by (seed, stream, position):
the Philox key is ``[seed, stream]`` and the position is the index into that
key's output sequence.  Draw (t, channel) of a simulation maps to position
``t * n_channels + channel``, so the value consumed for a given unit at a
given step does not depend on schedule, execution order or worker count.

numpy's Philox emits 64-bit words in blocks of four per counter increment;
``counter=[p // 4, 0, 0, 0]`` plus discarding ``p % 4`` draws seeks to an
arbitrary position exactly (verified against whole-sequence generation in
the tests).
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox

MASK64 = (1 << 64) - 1

# Stream purposes.  Per-trial streams add ``trial << 8`` so that purposes
# and trials never collide.
STREAM_SPIKE = 1      # Bernoulli draws, grid (steps, channels)
STREAM_SCAN = 2       # random-scan unit choices, one per step
STREAM_INIT_THETA = 3  # initial activation draws, grid (units, 2)
STREAM_INIT_Y = 4     # initial assignment draws, one per unit
STREAM_TRIAL_START = 5  # ensemble starting positions, grid (trials, dim)


def trial_stream(purpose: int, trial: int) -> int:
    """Stream id for an independent trial within one seeded experiment."""
    return (purpose + (trial << 8)) & MASK64


def generator(seed: int, stream: int) -> Generator:
    """Fresh numpy Generator positioned at the start of (seed, stream)."""
    return Generator(Philox(key=[seed & MASK64, stream & MASK64]))


def uniform_block(seed: int, stream: int, count: int, start: int = 0) -> np.ndarray:
    """``count`` uniforms in [0, 1) at positions start .. start+count-1.

    Positional: concatenating blocks reproduces one long generation, so any
    window of a stream can be regenerated without replaying its prefix.
    """
    if count < 0 or start < 0:
        raise ValueError("count and start must be non-negative")
    if count == 0:
        return np.empty(0)
    bg = Philox(key=[seed & MASK64, stream & MASK64], counter=[start // 4, 0, 0, 0])
    gen = Generator(bg)
    skip = start % 4
    vals = gen.random(skip + count)
    return vals[skip:]


def uniform_grid(seed: int, stream: int, steps: int, channels: int,
                 t0: int = 0) -> np.ndarray:
    """Uniform grid of shape (steps, channels); element (t, c) sits at
    stream position ``(t0 + t) * channels + c``."""
    block = uniform_block(seed, stream, steps * channels, start=t0 * channels)
    return block.reshape(steps, channels)


def uniform_at(seed: int, stream: int, t: int, channel: int,
               channels: int) -> float:
    """Single draw for (step t, channel) under a ``channels``-wide grid."""
    return float(uniform_block(seed, stream, 1, start=t * channels + channel)[0])
