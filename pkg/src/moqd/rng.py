"""Named random substreams derived from one master seed.

Each run owns independent counter-based (Philox) streams for tessellation
construction, population init, parent selection, variation, and archive
eviction.  Streams are derived by spawn key, never by drawing from each
other, so adding parallelism or reordering set-up code cannot shift draws
between concerns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

STREAM_NAMES = (
    "cvt",
    "cvt_scalar",
    "init",
    "selection",
    "variation",
    "eviction",
    "eviction_passive",
)
_STREAM_INDEX = {name: i for i, name in enumerate(STREAM_NAMES)}


def named_stream(master_seed: int, name: str) -> np.random.Generator:
    """Independent generator for one named concern of one run."""
    try:
        idx = _STREAM_INDEX[name]
    except KeyError:
        raise ValueError(f"unknown stream name {name!r}; known: {STREAM_NAMES}") from None
    seq = np.random.SeedSequence(master_seed, spawn_key=(idx,))
    return np.random.Generator(np.random.Philox(seq))


@dataclass
class RunStreams:
    """All named streams of a single run, created lazily."""

    master_seed: int
    _streams: dict = field(default_factory=dict, repr=False)

    def __getattr__(self, name: str) -> np.random.Generator:
        if name.startswith("_") or name not in _STREAM_INDEX:
            raise AttributeError(name)
        if name not in self._streams:
            self._streams[name] = named_stream(self.master_seed, name)
        return self._streams[name]
