"""Keyed random streams.

Every consumer of randomness asks for a stream by ``(seed, purpose, *index)``.
Streams are Philox (counter-based) generators built from a ``SeedSequence``
whose spawn key is the purpose/index tuple, so e.g. the shadowing draw does
not change when the number of Monte-Carlo realizations does.
"""

from __future__ import annotations

import numpy as np

TOPOLOGY = 1
SHADOWING = 2
CHANNEL = 3
BOOTSTRAP = 4
PILOT_NOISE = 5
COLLOCATED = 6
EXPERIMENT = 7


def stream(seed: int, purpose: int, *index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(purpose), *map(int, index)))
    return np.random.Generator(np.random.Philox(ss))


def complex_normal(rng: np.random.Generator, shape, variance=1.0) -> np.ndarray:
    """CN(0, variance) samples: real and imaginary parts i.i.d. N(0, variance/2)."""
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    z = rng.standard_normal((*tuple(np.atleast_1d(shape)), 2))
    return (z[..., 0] + 1j * z[..., 1]) * scale
