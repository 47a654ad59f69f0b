"""Seeded counter-based random generators.

All stochastic code draws from ``numpy.random.Philox`` streams. Child streams
for shots, shards or bootstrap sets are keyed by ``(root_seed, index)`` so their
content does not depend on evaluation order or worker count.
"""

from __future__ import annotations

import numpy as np

SEED_MAX = 2**64 - 1


def _check(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return seed


def make_generator(seed: int, *path: int) -> np.random.Generator:
    """Philox generator keyed by ``seed`` and an optional index path."""
    ss = np.random.SeedSequence([_check(seed), *[int(p) for p in path]])
    return np.random.Generator(np.random.Philox(ss))


def child_seeds(seed: int, n: int) -> list[int]:
    """Deterministic 64-bit child seeds for ``n`` workers or items."""
    ss = np.random.SeedSequence(_check(seed))
    return [int(s.generate_state(1, dtype=np.uint64)[0]) for s in ss.spawn(n)]
