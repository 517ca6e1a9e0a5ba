"""Counter-based random streams for reproducible, order-independent Monte Carlo.

Every stochastic routine in the package draws from a Philox generator keyed
by (master seed, purpose tag, replicate index).  Streams for distinct
replicates are independent and may be consumed in any order or in parallel
without changing results, which is what makes the harness's deterministic
reduce possible.
"""
from __future__ import annotations

import numpy as np

# Purpose tags keep streams for different stages of one replicate disjoint.
FIELD = 0x11
BRIDGE = 0x22
PROBE = 0x33
PAIRS = 0x44


def stream(seed: int, purpose: int, replicate: int = 0) -> np.random.Generator:
    """Return the generator for one (seed, purpose, replicate) cell."""
    ss = np.random.SeedSequence(entropy=(int(seed) & (2**64 - 1), purpose, replicate))
    return np.random.Generator(np.random.Philox(ss))
