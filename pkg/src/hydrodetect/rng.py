"""Seeded random-number streams.

Every stochastic stage of the pipeline draws from its own named substream of
a single root seed, so one integer reproduces an entire run.
"""

import zlib

import numpy as np


def substream(root_seed: int, name: str) -> np.random.Generator:
    """Return the generator for a named substream of ``root_seed``.

    The mapping is stable across processes and platforms (CRC32 of the
    stream name mixed into the seed sequence).
    """
    tag = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([root_seed, tag]))


def spawn(rng: np.random.Generator, n: int) -> list[np.random.Generator]:
    """Derive ``n`` independent child generators (e.g. one per tree)."""
    seeds = rng.integers(0, 2**63 - 1, size=n)
    return [np.random.default_rng(int(s)) for s in seeds]
