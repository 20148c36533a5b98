"""Deterministic RNG stream derivation.

Every stochastic stage of the pipeline draws from its own generator derived
from (seed, stage tag), so the output of one stage can never perturb another
and generation order is fixed by construction, not by scheduling.
"""

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def tag_key(tag: str) -> int:
    """Stable 64-bit key for a stage tag (built-in hash() is salted per run)."""
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def stream(seed: int, tag: str) -> np.random.Generator:
    """Return an independent PCG64 generator for (seed, tag)."""
    ss = np.random.SeedSequence([seed & MASK64, tag_key(tag)])
    return np.random.Generator(np.random.PCG64(ss))


def substream_seed(seed: int, tag: str) -> int:
    """Derive a 64-bit child seed, for components that build their own streams."""
    return (seed ^ tag_key(tag)) & MASK64
