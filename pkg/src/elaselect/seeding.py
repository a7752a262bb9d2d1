"""Deterministic seed derivation.

Every random draw in the toolkit flows from `stable_seed`, a platform- and
process-independent hash of string/int identifiers.  This keeps runs
reproducible regardless of worker count or task scheduling.
"""

import hashlib

import numpy as np


def stable_seed(*parts) -> int:
    """Derive a 64-bit seed from a tuple of ints/strings/floats.

    The same parts always give the same seed, across runs, platforms and
    Python versions (no reliance on the builtin `hash`).
    """
    key = "\x1f".join(repr(p) for p in parts).encode("utf-8")
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return int.from_bytes(digest, "big")


def rng_for(*parts) -> np.random.Generator:
    """A fresh generator seeded from `stable_seed(*parts)`."""
    return np.random.default_rng(stable_seed(*parts))
