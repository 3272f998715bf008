"""Reproducible random streams keyed by ``(master, stream)``.

Philox is counter based: the 128-bit key is the pair of 64-bit words
``(master, stream)``, so every stream is an independent sequence that does not
depend on how many other streams were drawn before it.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import UsageError

__all__ = ["RngSeed", "generator"]

_MASK64 = (1 << 64) - 1


class RngSeed(NamedTuple):
    master: int
    stream: int = 0

    def child(self, stream: int) -> "RngSeed":
        return RngSeed(self.master, stream)


def generator(seed: RngSeed | int, stream: int | None = None) -> np.random.Generator:
    """Return the Philox generator for ``(master, stream)``."""
    if not isinstance(seed, RngSeed):
        seed = RngSeed(int(seed), 0 if stream is None else int(stream))
    elif stream is not None:
        seed = seed.child(int(stream))
    if not (0 <= seed.master <= _MASK64 and 0 <= seed.stream <= _MASK64):
        raise UsageError("seed words must be unsigned 64-bit integers")
    key = np.array([seed.master, seed.stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
