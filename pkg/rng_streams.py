"""
Reproducible random streams.

Every replicate owns a numpy Generator derived from (seed, stream, replicate)
through SeedSequence spawn keys, so results do not depend on how replicates
are distributed over workers.
"""
from typing import List, Tuple

import numpy as np

STREAM_DPP = 0
STREAM_MATRIX = 1
STREAM_XI = 2
STREAM_REFERENCE = 3
STREAM_ALIAS = 4


def replicate_rng(seed: int, replicate: int, stream: int = STREAM_DPP) -> np.random.Generator:
    """
    Generator for one replicate.

    Args:
        seed: Master seed (>= 0)
        replicate: Replicate (or chunk) index (>= 0)
        stream: Purpose tag keeping independent experiments apart

    Returns:
        numpy.random.Generator seeded from SeedSequence(seed, spawn_key=(stream, replicate))
    """
    if seed < 0 or replicate < 0 or stream < 0:
        raise ValueError(f"seed, replicate and stream must be >= 0, got {seed}, {replicate}, {stream}")
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), int(replicate)))
    return np.random.default_rng(seq)


def chunk_bounds(replicates: int, chunk_size: int) -> List[Tuple[int, int]]:
    """Split range(replicates) into ordered [start, stop) chunks of at most chunk_size."""
    if replicates < 1:
        raise ValueError(f"replicates must be >= 1, got {replicates}")
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    return [(start, min(start + chunk_size, replicates)) for start in range(0, replicates, chunk_size)]
