"""Seeded random streams.

Every random draw in the package flows from an integer seed through a
named stream, so individual components (weight init, data split, scale
sampler) can be reproduced in isolation.  Streams are backed by the
counter-based Philox generator, which makes them cheap to derive and
independent of draw order elsewhere.
"""

import numpy as np

_STREAM_IDS = {
    "init": 0,
    "split": 1,
    "sampler": 2,
    "sbm": 3,
    "test": 4,
}


def stream_rng(seed, stream):
    """Return a Generator for the given (seed, stream name) pair."""
    try:
        stream_id = _STREAM_IDS[stream]
    except KeyError:
        raise ValueError(f"unknown stream {stream!r}") from None
    ss = np.random.SeedSequence(entropy=[int(seed) & 0xFFFFFFFFFFFFFFFF, stream_id])
    return np.random.Generator(np.random.Philox(ss))
