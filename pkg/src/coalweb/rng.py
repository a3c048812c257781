"""Counter-based random streams.

Every random quantity in the package is a pure function of a 64-bit seed and
an integer counter, so webs can be evaluated lazily on unbounded windows and
replicas can be generated in any order.

The mixer is the SplitMix64 finaliser.  Replica and site seeds are derived as

    derive_seed(root, k) = mix64(root + (k + 1) * GOLDEN)   (mod 2**64)

and the arrow at lattice point (i, j) of a field with seed ``s`` is the top
bit of ``mix64(mix64(s) + key(i, j) * GOLDEN)`` with
``key(i, j) = (i mod 2**32) << 32 | (j mod 2**32)``.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
MASK32 = (1 << 32) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive_seed(root: int, index: int) -> int:
    """Seed of the ``index``-th child stream of ``root``."""
    return mix64((root + (index + 1) * GOLDEN) & MASK64)


def derive_seeds(root: int, n: int, offset: int = 0) -> np.ndarray:
    return np.array([derive_seed(root, offset + k) for k in range(n)], dtype=np.uint64)


def mix64_array(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def arrow_keys(i, j) -> np.ndarray:
    i = np.asarray(i, dtype=np.int64).astype(np.uint64) & np.uint64(MASK32)
    j = np.asarray(j, dtype=np.int64).astype(np.uint64) & np.uint64(MASK32)
    return (i << np.uint64(32)) | j


def arrows_hashed(seed, i, j) -> np.ndarray:
    """Vectorised +-1 arrows; ``seed`` broadcasts against ``i`` and ``j``."""
    with np.errstate(over="ignore"):
        base = mix64_array(np.asarray(seed, dtype=np.uint64))
        h = mix64_array(base + arrow_keys(i, j) * np.uint64(GOLDEN))
    return np.where(h >> np.uint64(63), 1, -1).astype(np.int64)


def generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator keyed by ``(seed, stream)``."""
    key = np.array([int(seed) & MASK64, int(stream) & MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
