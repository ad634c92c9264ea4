"""Deterministic random-stream derivation for reproducible trials.

Every random draw in the package goes through a generator obtained from
:func:`substream`, keyed by the master seed plus arbitrary integer or
string tags (trial index, purpose, grid index, ...).  Distinct key tuples
yield statistically independent counter-based Philox streams, so trials
can run in any order, on any number of workers, and still reproduce the
same numbers.
"""

import zlib

import numpy as np


def _fold_key(key):
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    key = int(key)
    if key < 0:
        raise ValueError("stream keys must be non-negative integers or strings")
    return key


def substream(master_seed, *keys):
    """Counter-based generator keyed by ``(master_seed, *keys)``.

    String keys are folded to stable 32-bit values (CRC32) so stream
    identity is independent of interpreter hash randomization.
    """
    words = [_fold_key(master_seed)] + [_fold_key(k) for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))


def crandn(rng, *shape):
    """Standard circular complex Gaussian draws, unit variance per entry."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(0.5)
