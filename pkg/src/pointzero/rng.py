"""Deterministic, platform-stable random streams keyed by structured labels."""

from __future__ import annotations

import hashlib

import numpy as np


def hash64(*parts) -> int:
    """Stable 64-bit hash of a sequence of values (strings, ints, bytes).

    Used for diffusion seeds and mock-embedding seeds, so it must never
    depend on interpreter hash randomization or platform word size.
    """
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        if isinstance(p, bytes):
            h.update(p)
        else:
            h.update(str(p).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "big")


def substream(*key) -> np.random.Generator:
    """Independent PCG64 generator for a structured key.

    Same key -> same stream on every platform; distinct keys -> streams
    that are independent for all practical purposes. Callers pass
    (seed, domain-label, primitive-index) style keys so per-primitive
    work can run in any order or in parallel without changing results.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(hash64(*key))))
