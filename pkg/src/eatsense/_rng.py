"""Deterministic random-stream derivation.

All stochastic steps in the pipeline draw from generators derived here. A
stream is keyed by the master seed plus an arbitrary tuple of labels (user
ids, protocol names, tree indices, ...), so results never depend on
iteration order or worker count.
"""
from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _key_words(keys) -> list[int]:
    h = hashlib.sha256()
    for k in keys:
        h.update(repr(k).encode("utf-8"))
        h.update(b"\x1f")
    d = h.digest()
    return [int.from_bytes(d[i : i + 8], "little") for i in range(0, 32, 8)]


def seed_sequence(*keys) -> np.random.SeedSequence:
    """SeedSequence keyed by an arbitrary tuple of hashable labels."""
    return np.random.SeedSequence(_key_words(keys))


def rng(*keys) -> np.random.Generator:
    """Independent PCG64 generator for the given key tuple."""
    return np.random.Generator(np.random.PCG64(seed_sequence(*keys)))


def derive_seed(*keys) -> int:
    """Stable 64-bit integer seed for the given key tuple."""
    return int(seed_sequence(*keys).generate_state(1, np.uint64)[0])


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (next_state, output).

    Mirrors the in-kernel generator bit for bit, so host-side draws (e.g.
    bootstrap indices) and kernel-side draws (feature subsets) can share one
    specification.
    """
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    z = z ^ (z >> 31)
    return state, z
