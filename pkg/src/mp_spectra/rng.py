"""Seeded Gaussian generation.

Every stream is a Philox (counter-based) generator; normals come from the
Box-Muller transform applied to its uniform doubles, so a given seed yields
the same draws on every platform.  Replicate seeds are derived by hashing
``(master_seed, *keys)`` through :class:`numpy.random.SeedSequence`; serial
and parallel runs therefore see identical streams.
"""
import math

import numpy as np


def derive_seed(master_seed, *keys):
    """64-bit seed for the stream identified by ``keys`` under ``master_seed``."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in keys))
    lo, hi = seq.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


def make_rng(seed):
    """Philox generator for an integer seed; generators pass through unchanged."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(int(seed)))


def standard_normal(rng, size=None):
    """Standard normal draws via Box-Muller.

    Uses ``ceil(m/2)`` pairs of uniforms for ``m`` outputs; cosine branch first,
    then sine branch.
    """
    rng = make_rng(rng)
    if size is None:
        return float(standard_normal(rng, 1)[0])
    shape = (size,) if np.isscalar(size) else tuple(size)
    count = int(np.prod(shape, dtype=np.int64))
    half = (count + 1) // 2
    u1 = rng.random(half)
    u2 = rng.random(half)
    radius = np.sqrt(-2.0 * np.log1p(-u1))  # 1 - u1 lies in (0, 1]
    angle = 2.0 * math.pi * u2
    out = np.concatenate((radius * np.cos(angle), radius * np.sin(angle)))
    return out[:count].reshape(shape)
