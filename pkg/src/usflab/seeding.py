"""Seed derivation and counter-based per-cell uniforms."""
from __future__ import annotations

import secrets

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def derive_seed(seed: int, *key: int) -> int:
    """Independent 64-bit seed for the stream labelled ``key`` under ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(x) for x in key))
    return int(ss.generate_state(1, np.uint64)[0])


def fresh_seed() -> int:
    return secrets.randbits(63)


def rng(seed: int | np.random.Generator | None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _splitmix(x: np.ndarray) -> np.ndarray:
    z = x + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def hashed_uniforms(seed: int, keys: np.ndarray, stream: int) -> np.ndarray:
    """Uniforms in [0, 1) that depend only on ``(seed, row of keys, stream)``.

    ``keys`` is an integer array (M, c); each row is hashed with a
    SplitMix64 chain, so any subset of rows can be regenerated on its own.
    """
    keys = np.atleast_2d(np.asarray(keys, dtype=np.int64))
    with np.errstate(over="ignore"):
        h = np.full(keys.shape[0], derive_seed(seed, 0xCE11), dtype=np.uint64)
        h = _splitmix(h)
        for j in range(keys.shape[1]):
            h = _splitmix(h ^ keys[:, j].view(np.uint64))
        h = _splitmix(h ^ np.uint64(stream))
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
