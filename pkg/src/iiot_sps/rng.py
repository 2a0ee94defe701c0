"""Named, order-independent random substreams derived from one master seed."""

from __future__ import annotations

import zlib

import numpy as np


def _key(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part)
    return zlib.crc32(str(part).encode())


def substream(seed: int, *names) -> np.random.Generator:
    """Generator for the stream ``names`` under ``seed``.

    The same (seed, names) pair always yields the same stream, regardless of
    how many other streams were drawn before it.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key(n) for n in names))
    return np.random.Generator(np.random.PCG64(ss))
