"""Counter-based random streams keyed by ``(seed, stream_key)``.

Every random draw in the package (weight init, batches, random row
selection, Dion subspace init) comes from a Philox stream whose 128-bit key
is the pair ``(seed, stream_key)``. Two generators built from the same pair
produce the same sequence on every platform, and no generator carries state
between optimizer steps: the step index is part of the key.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# Domain tags occupy the top byte of the stream key so that selection,
# initialisation and data streams never collide for the same (id, step).
DOMAIN_SELECT = 0x01
DOMAIN_SUBSPACE = 0x02
DOMAIN_INIT = 0x03
DOMAIN_BATCH = 0x04
DOMAIN_TEACHER = 0x05
DOMAIN_BENCH = 0x06
DOMAIN_ESTIMATE = 0x07


def stream_key(param_id: int, step: int, domain: int = DOMAIN_SELECT) -> int:
    """Pack ``(domain, param_id, step)`` into one 64-bit stream key.

    Layout: 8 bits domain | 24 bits parameter id | 32 bits step.
    """
    if not 0 <= domain < (1 << 8):
        raise ValueError(f"domain out of range: {domain}")
    if not 0 <= param_id < (1 << 24):
        raise ValueError(f"param_id out of range: {param_id}")
    if not 0 <= step < (1 << 32):
        raise ValueError(f"step out of range: {step}")
    return (domain << 56) | (param_id << 32) | step


class Rng:
    """Deterministic generator for one ``(seed, stream_key)`` stream."""

    __slots__ = ("seed", "stream_key", "_gen")

    def __init__(self, seed: int, stream_key: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_key = int(stream_key) & _MASK64
        bitgen = np.random.Philox(key=self.seed | (self.stream_key << 64))
        self._gen = np.random.Generator(bitgen)

    @classmethod
    def for_stream(cls, seed: int, param_id: int, step: int, domain: int = DOMAIN_SELECT) -> "Rng":
        return cls(seed, stream_key(param_id, step, domain))

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, stream_key={self.stream_key:#x})"

    def normal(self, shape) -> np.ndarray:
        return self._gen.standard_normal(shape)

    def uniform(self, shape=None) -> np.ndarray | float:
        return self._gen.random(shape)

    def integers(self, low, high) -> np.ndarray:
        """Integers in ``[low, high)``; ``low`` may be an array (broadcast)."""
        return self._gen.integers(low, high)

    def raw_uint64(self, n: int) -> np.ndarray:
        return self._gen.integers(0, _MASK64, size=n, dtype=np.uint64, endpoint=True)
