"""Multi-index arithmetic and the lexicographic linearization of d-indices.

All public functions use 1-based indices: a grid of size ``n`` holds the
d-indices ``(1,...,1) .. n`` and the flat indices ``1 .. N(n)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

MultiIndex = tuple[int, ...]

_INT64_MAX = np.iinfo(np.int64).max


def as_multiindex(value: int | Sequence[int]) -> MultiIndex:
    if isinstance(value, (int, np.integer)):
        return (int(value),)
    out = tuple(int(v) for v in value)
    if not out:
        raise ValueError("a multi-index needs at least one component")
    return out


@dataclass(frozen=True)
class GridSize:
    """Grid size ``n`` together with the derived ``N(n)`` and step vector ``h``."""

    n: MultiIndex

    def __post_init__(self):
        n = as_multiindex(self.n)
        if any(c < 1 for c in n):
            raise ValueError(f"grid size components must be >= 1, got {n}")
        total = 1
        for c in n:
            total *= c
            if total > _INT64_MAX:
                raise OverflowError(f"N(n) overflows int64 for n={n}")
        object.__setattr__(self, "n", n)

    @classmethod
    def cube(cls, m: int, d: int) -> "GridSize":
        """The isotropic grid ``(m, ..., m)`` used by all sweeps."""
        return cls((m,) * d)

    @classmethod
    def coerce(cls, value: "GridSize | int | Sequence[int]", d: int | None = None) -> "GridSize":
        if isinstance(value, GridSize):
            return value
        if isinstance(value, (int, np.integer)) and d is not None:
            return cls.cube(int(value), d)
        return cls(as_multiindex(value))

    @property
    def d(self) -> int:
        return len(self.n)

    @property
    def N(self) -> int:
        return math.prod(self.n)

    @property
    def h(self) -> np.ndarray:
        return 1.0 / (np.asarray(self.n, dtype=float) + 1.0)

    def __str__(self) -> str:
        return "x".join(str(c) for c in self.n)


def _check_same_dim(a: Sequence[int], b: Sequence[int]) -> None:
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")


def lex_compare(a: Sequence[int], b: Sequence[int]) -> int:
    """Return -1, 0 or 1 as ``a`` precedes, equals or follows ``b``."""
    _check_same_dim(a, b)
    for x, y in zip(a, b):
        if x != y:
            return -1 if x < y else 1
    return 0


def linearize(h: Sequence[int], n: GridSize) -> int:
    """Flat position of the d-index ``h`` in the lexicographic order of ``1..n``."""
    _check_same_dim(h, n.n)
    for c, nc in zip(h, n.n):
        if not 1 <= c <= nc:
            raise IndexError(f"index {tuple(h)} out of range 1..{n.n}")
    k = 0
    for c, nc in zip(h, n.n):
        k = k * nc + (c - 1)
    return k + 1


def delinearize(k: int, n: GridSize) -> MultiIndex:
    if not 1 <= k <= n.N:
        raise IndexError(f"flat index {k} out of range 1..{n.N}")
    rem = k - 1
    out = []
    for nc in reversed(n.n):
        rem, r = divmod(rem, nc)
        out.append(r + 1)
    return tuple(reversed(out))


def iter_range(lo: Sequence[int], hi: Sequence[int]) -> Iterator[MultiIndex]:
    """All d-indices between ``lo`` and ``hi`` in lexicographic order.

    An empty range (``lo`` not <= ``hi``) yields nothing.
    """
    _check_same_dim(lo, hi)
    axes = [range(a, b + 1) for a, b in zip(lo, hi)]
    return itertools.product(*axes)


def grid_indices(n: GridSize) -> np.ndarray:
    """(N, d) integer array of all d-indices ``1..n`` in lexicographic order."""
    axes = [np.arange(1, c + 1) for c in n.n]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def linearize_array(idx: np.ndarray, n: GridSize) -> np.ndarray:
    """Vectorized :func:`linearize` for an (M, d) array; no range check."""
    flat = np.zeros(idx.shape[0], dtype=np.int64)
    for axis, nc in enumerate(n.n):
        flat = flat * nc + (idx[:, axis] - 1)
    return flat + 1
