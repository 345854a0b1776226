"""Small shared helpers: deterministic ordering and seeded RNG derivation."""

from __future__ import annotations

import hashlib
from typing import Mapping

import numpy as np


def top_items(weights: Mapping[str, float], k: int) -> list[tuple[str, float]]:
    """The k heaviest items under one descending sort on (weight, term).

    Ties on weight therefore resolve to the lexicographically larger
    term first; the cut is deterministic and nested across k.
    """
    ranked = sorted(weights.items(), key=lambda kv: (kv[1], kv[0]), reverse=True)
    return ranked[:k]


def stable_hash(text: str) -> int:
    """Platform-independent 64-bit hash of a string (for seed derivation)."""
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


def derived_rng(*entropy: int | str | None) -> np.random.Generator:
    """PCG64 generator seeded from the given components.

    Strings are folded in via sha256 so the stream is reproducible across
    platforms and process runs. None components are skipped; an empty
    entropy list yields a nondeterministic generator.
    """
    parts = [stable_hash(e) if isinstance(e, str) else int(e) for e in entropy if e is not None]
    if not parts:
        return np.random.default_rng()
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(parts)))
