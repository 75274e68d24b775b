"""Deterministic child-seed derivation.

Every seeded operation in the package draws child seeds through numpy's
SeedSequence (PCG64 generators downstream), so a master seed fixes all
randomness regardless of worker count or evaluation order.
"""

from __future__ import annotations

import numpy as np


def spawn_seeds(seed: int, n: int) -> list[int]:
    """n independent integer seeds derived from a master seed."""
    return [int(child.generate_state(1, dtype=np.uint64)[0])
            for child in np.random.SeedSequence(seed).spawn(n)]
