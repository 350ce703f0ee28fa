"""Deterministic random number generation.

Every random choice in the package flows from a single 64-bit seed through
:func:`generator`.  The bit generator is pinned to PCG64 so streams are
reproducible across platforms and numpy versions; independent substreams are
derived with :func:`spawn` rather than by seed arithmetic.
"""

from __future__ import annotations

import numpy as np


def generator(seed: int) -> np.random.Generator:
    """Return the package-wide generator for ``seed`` (PCG64 stream)."""
    return np.random.Generator(np.random.PCG64(seed))


def spawn(seed: int, n_children: int) -> list[np.random.Generator]:
    """Derive ``n_children`` independent generators from one seed."""
    seqs = np.random.SeedSequence(seed).spawn(n_children)
    return [np.random.Generator(np.random.PCG64(s)) for s in seqs]
