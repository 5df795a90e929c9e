"""Counter-based seed derivation.

Every random stream is derived from a root seed plus a tuple of integer
coordinates (fold index, tree index, ...), so results never depend on the
order in which folds or trees are executed.
"""
from __future__ import annotations

import zlib

import numpy as np


def key_for(name: str) -> int:
    """Stable integer key for a string (Python's ``hash`` is salted per process)."""
    return zlib.crc32(name.encode("utf-8"))


def sub_seed(seed: int, *parts: int) -> int:
    """A 64-bit seed mixed from ``seed`` and ``parts``."""
    ss = np.random.SeedSequence([int(seed), *(int(p) for p in parts)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def sub_rng(seed: int, *parts: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *(int(p) for p in parts)]))
