"""Deterministic random-stream derivation.

Every stochastic component in the package draws from a generator obtained
here.  Streams are derived from a root seed plus a sequence of string or
integer keys, so per-item streams (one per dialogue pair, one per
permutation, ...) are independent of iteration order and of each other.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK32 = 0xFFFFFFFF


def _key_words(key: str | int) -> list[int]:
    """Map a key to a stable list of 32-bit words via sha256."""
    if isinstance(key, bool):
        raise TypeError("bool keys are ambiguous; use int or str")
    if isinstance(key, int):
        data = b"i:" + str(key).encode("utf-8")
    elif isinstance(key, str):
        data = b"s:" + key.encode("utf-8")
    else:
        raise TypeError(f"unsupported key type: {type(key).__name__}")
    digest = hashlib.sha256(data).digest()
    return [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]


def derive_rng(seed: int, *keys: str | int) -> np.random.Generator:
    """Return a Generator for the stream identified by (seed, *keys)."""
    entropy: list[int] = [int(seed) & _MASK32]
    for key in keys:
        entropy.extend(_key_words(key))
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seed(seed: int, *keys: str | int) -> int:
    """Collapse (seed, *keys) to a single integer seed for sub-configs."""
    entropy: list[int] = [int(seed) & _MASK32]
    for key in keys:
        entropy.extend(_key_words(key))
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])
