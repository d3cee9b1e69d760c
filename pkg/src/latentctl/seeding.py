"""Deterministic seed derivation used across the package.

Every component that needs randomness derives its own stream from
(master seed, integer keys...) so runs are reproducible and individual
pieces can be recomputed in isolation.
"""

from __future__ import annotations

import numpy as np


def derive_seed(*keys: int) -> int:
    """Stable 63-bit seed from a tuple of integer keys."""
    state = np.random.SeedSequence(list(keys)).generate_state(2, np.uint32)
    return int(state.view(np.uint64)[0]) & ((1 << 63) - 1)
