"""Counter-based random streams.

Every stream is a Philox4x64 generator whose 128-bit key is derived from a
tuple of non-negative integers.  Block ``i`` of the stream (four 64-bit words)
depends only on the key and on ``i``, so any prefix of a stream is reproduced
exactly no matter how the work is split up.
"""
from __future__ import annotations

import numpy as np

_U64 = (1 << 64) - 1
_TWO_M53 = 2.0 ** -53


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if seed < 0 or seed > _U64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def derive_key(*words: int) -> np.ndarray:
    """Hash a tuple of unsigned integers into a Philox key (two uint64 words)."""
    entropy = [_check_seed(w) for w in words]
    return np.random.SeedSequence(entropy).generate_state(2, np.uint64)


def derive_seed(*words: int) -> int:
    """Hash-combine integers into a single 64-bit seed."""
    entropy = [_check_seed(w) for w in words]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def philox(*words: int) -> np.random.Philox:
    return np.random.Philox(key=derive_key(*words))


def generator(*words: int) -> np.random.Generator:
    return np.random.Generator(philox(*words))


def uniform_blocks(n: int, *words: int) -> np.ndarray:
    """Return an ``(n, 4)`` array of open-interval uniforms.

    Row ``i`` is produced from counter block ``i`` of the stream keyed by
    ``words``; values lie strictly inside (0, 1).
    """
    raw = philox(*words).random_raw(4 * n).reshape(n, 4)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53
