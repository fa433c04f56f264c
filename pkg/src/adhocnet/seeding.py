"""Named, independent random sub-streams derived from one global seed."""
from __future__ import annotations

import zlib

import numpy as np

STREAMS = ("layout", "optimizer", "simulator", "perturbation", "routing")


def substream(seed: int, name: str, *keys: int) -> int:
    """A 63-bit seed for stream ``name``, further split by integer ``keys``.

    Changing one stream's keys never shifts another stream's values.
    """
    tag = zlib.crc32(name.encode("utf-8"))
    ss = np.random.SeedSequence(int(seed), spawn_key=(tag, *(int(k) for k in keys)))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
