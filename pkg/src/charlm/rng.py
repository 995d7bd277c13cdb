"""Portable pseudo-random numbers.

Every random decision in the package (parameter init, shuffling, sampling)
goes through :class:`PortableRNG`. It wraps numpy's PCG64 bit generator
(PCG-XSL-RR 128/64) and only consumes its raw 64-bit output stream, which
is fixed by the algorithm and identical on every platform. All derived
quantities (uniform floats, bounded integers, permutations) are computed
here rather than through ``numpy.random.Generator`` whose higher-level
methods carry no cross-version stream guarantee.

Conversions:

* uniform float in [0, 1): ``(u64 >> 11) * 2**-53``
* integer in [0, n): rejection sampling on ``u64 % n`` with the biased tail
  ``u64 >= 2**64 - (2**64 % n)`` rejected
* permutation: Fisher-Yates, ``i`` from ``n - 1`` down to ``1``, swapping
  ``i`` with ``below(i + 1)``
"""
from __future__ import annotations

import numpy as np

_TWO64 = 1 << 64
_INV53 = 2.0**-53


class PortableRNG:
    def __init__(self, seed: int = 0):
        if seed < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        self._bg = np.random.PCG64(seed)

    @classmethod
    def from_state(cls, state: dict) -> "PortableRNG":
        rng = cls(0)
        rng.state = state
        return rng

    @property
    def state(self) -> dict:
        """PCG64 state as plain integers: ``state``, ``inc``, ``has_uint32``, ``uinteger``."""
        s = self._bg.state
        return {
            "state": int(s["state"]["state"]),
            "inc": int(s["state"]["inc"]),
            "has_uint32": int(s["has_uint32"]),
            "uinteger": int(s["uinteger"]),
        }

    @state.setter
    def state(self, value: dict) -> None:
        self._bg.state = {
            "bit_generator": "PCG64",
            "state": {"state": int(value["state"]), "inc": int(value["inc"])},
            "has_uint32": int(value["has_uint32"]),
            "uinteger": int(value["uinteger"]),
        }

    def next_u64(self) -> int:
        return int(self._bg.random_raw())

    def uniform(self, size=None):
        """Floats in [0, 1). Returns a Python float when ``size`` is None."""
        if size is None:
            return (self.next_u64() >> 11) * _INV53
        n = int(np.prod(size))
        raw = self._bg.random_raw(n) >> np.uint64(11)
        return (raw.astype(np.float64) * _INV53).reshape(size)

    def below(self, n: int) -> int:
        if n <= 0:
            raise ValueError(f"upper bound must be positive, got {n}")
        limit = _TWO64 - (_TWO64 % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def permutation(self, n: int) -> list[int]:
        idx = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            idx[i], idx[j] = idx[j], idx[i]
        return idx
