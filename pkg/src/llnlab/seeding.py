"""Seed derivation for reproducible, scheduling-independent sampling.

Every random draw in the package flows through Philox counter-based bit
generators keyed by ``numpy.random.SeedSequence``.  Three disjoint
derivation namespaces keep streams from colliding:

* ``trajectory_streams(seed)`` - the two per-trajectory streams (one for
  latent draws, one for indexed value draws), spawn keys ``(0, 0)`` and
  ``(0, 1)``.
* ``derived_seed(master_seed, index)`` - per-replication child seeds, a
  pure function of its arguments so results never depend on worker count
  or scheduling, spawn key ``(1, index)``.
* ``chunk_generator(master_seed, chunk_index)`` - block generators for
  vectorised estimators, spawn key ``(2, chunk_index)``.

Seeds are treated as unsigned 64-bit integers (negative inputs wrap).
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _entropy(seed: int) -> int:
    return int(seed) & _MASK64


def _generator(seed: int, spawn_key: tuple[int, ...]) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=_entropy(seed), spawn_key=spawn_key)
    return np.random.Generator(np.random.Philox(ss))


def trajectory_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Return the (latent, values) generator pair for one trajectory."""
    return _generator(seed, (0, 0)), _generator(seed, (0, 1))


def derived_seed(master_seed: int, index: int) -> int:
    """Child seed for replication ``index``, pure in both arguments."""
    ss = np.random.SeedSequence(entropy=_entropy(master_seed), spawn_key=(1, int(index)))
    return int(ss.generate_state(1, np.uint64)[0])


def chunk_generator(master_seed: int, chunk_index: int) -> np.random.Generator:
    """Block generator for vectorised estimator chunk ``chunk_index``."""
    return _generator(master_seed, (2, int(chunk_index)))


def chunk_rows(horizon: int, budget: int = 1 << 21, cap: int = 65536) -> int:
    """Rows per sampling chunk, a pure function of the horizon.

    Chunk boundaries determine which generator produces which sample, so
    this must not depend on anything besides the call parameters.
    """
    return max(1, min(cap, budget // max(1, int(horizon))))
