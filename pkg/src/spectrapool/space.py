"""Discrete attribute spaces, instance codes, and leaf path schemata."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

WILDCARD = -1

# Largest space we are willing to enumerate exhaustively (codes, caches, oracles).
EXHAUSTIVE_LIMIT = 1 << 20

# Spaces at or below this size get integer-code fast paths in the hot loop.
CODE_CACHE_LIMIT = 1 << 16


class AttributeSpace:
    """An ordered set of nominal attributes with per-attribute cardinalities.

    Instances are tuples of digit-coded values, ``0 <= x_m < cardinality[m]``.
    Every instance also has a mixed-radix integer code with attribute 0 as the
    most significant position; codes give O(1) dispatch into per-space caches.
    """

    __slots__ = ("names", "cardinalities", "d", "strides", "size", "_digit_matrix")

    def __init__(self, cardinalities, names=None):
        cards = tuple(int(c) for c in cardinalities)
        if not cards:
            raise ValueError("space needs at least one attribute")
        for c in cards:
            if c < 2:
                raise ValueError(f"attribute cardinality must be >= 2, got {c}")
        if names is None:
            names = tuple(f"a{m}" for m in range(len(cards)))
        else:
            names = tuple(str(n) for n in names)
            if len(names) != len(cards):
                raise ValueError("names and cardinalities differ in length")
        self.names = names
        self.cardinalities = cards
        self.d = len(cards)
        strides = [1] * self.d
        for m in range(self.d - 2, -1, -1):
            strides[m] = strides[m + 1] * cards[m + 1]
        self.strides = tuple(strides)
        self.size = strides[0] * cards[0]
        self._digit_matrix = None

    def __repr__(self):
        return f"AttributeSpace({list(self.cardinalities)!r})"

    def __eq__(self, other):
        return (
            isinstance(other, AttributeSpace)
            and self.cardinalities == other.cardinalities
            and self.names == other.names
        )

    def __hash__(self):
        return hash((self.names, self.cardinalities))

    def validate_values(self, values) -> bool:
        if len(values) != self.d:
            return False
        for m, v in enumerate(values):
            if not 0 <= v < self.cardinalities[m]:
                return False
        return True

    def encode(self, values) -> int:
        """Mixed-radix code of a value tuple, attribute 0 most significant."""
        code = 0
        for v, s in zip(values, self.strides):
            code += v * s
        return code

    def decode(self, code: int) -> tuple:
        out = []
        for m in range(self.d):
            out.append((code // self.strides[m]) % self.cardinalities[m])
        return tuple(out)

    def encode_array(self, values: np.ndarray) -> np.ndarray:
        """Vectorized encode of an (n, d) digit matrix."""
        return values @ np.asarray(self.strides, dtype=np.int64)

    def decode_array(self, codes: np.ndarray) -> np.ndarray:
        """Vectorized decode of codes into an (n, d) digit matrix."""
        codes = np.asarray(codes, dtype=np.int64)
        strides = np.asarray(self.strides, dtype=np.int64)
        cards = np.asarray(self.cardinalities, dtype=np.int64)
        return (codes[:, None] // strides[None, :]) % cards[None, :]

    def digit_matrix(self) -> np.ndarray:
        """Digits of every code in the space, shape (size, d). Cached."""
        if self.size > EXHAUSTIVE_LIMIT:
            raise ValueError(
                f"space too large to enumerate ({self.size} > {EXHAUSTIVE_LIMIT})"
            )
        if self._digit_matrix is None:
            self._digit_matrix = self.decode_array(np.arange(self.size))
            self._digit_matrix.setflags(write=False)
        return self._digit_matrix


@dataclass(frozen=True)
class Schema:
    """One root-to-leaf path: fixed attribute values, WILDCARD elsewhere."""

    values: tuple
    label: float

    def fixed_attrs(self) -> tuple:
        return tuple(m for m, v in enumerate(self.values) if v != WILDCARD)

    def weight(self, space: AttributeSpace) -> float:
        """Fraction of the space covered: 1 / prod(cardinality of fixed attrs)."""
        p = 1
        for m in self.fixed_attrs():
            p *= space.cardinalities[m]
        return 1.0 / p

    def matches(self, values) -> bool:
        return all(s == WILDCARD or s == v for s, v in zip(self.values, values))

    def completions(self, space: AttributeSpace):
        """Iterate all full value tuples covered by this schema."""
        free = [m for m, v in enumerate(self.values) if v == WILDCARD]
        count = 1
        for m in free:
            count *= space.cardinalities[m]
        if count > EXHAUSTIVE_LIMIT:
            raise ValueError("schema covers too many instances to enumerate")
        base = list(self.values)
        for i in range(count):
            rem = i
            for m in reversed(free):
                c = space.cardinalities[m]
                base[m] = rem % c
                rem //= c
            yield tuple(base)


def entropy2(n0: int, n1: int) -> float:
    """Binary entropy of a two-class count pair, in bits."""
    n = n0 + n1
    if n == 0 or n0 == 0 or n1 == 0:
        return 0.0
    p = n0 / n
    q = n1 / n
    return -(p * math.log2(p) + q * math.log2(q))
