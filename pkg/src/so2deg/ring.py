"""Truncated tom Dieck ring U(SO(2)) = Z + (sum over k >= 1 of Z).

An element carries one integer for the subgroup SO(2) and one integer for
each finite cyclic subgroup Z_k.  Only finitely many Z_k coordinates are
nonzero, so elements are stored sparsely and kept in canonical form.

Some equivariant indices are only defined on part of their coordinates.
Those coordinates are tracked explicitly in ``undefined`` and propagate
through every ring operation; they never compare equal to zero.
"""

from __future__ import annotations

import json
from functools import reduce
from typing import Iterable, Mapping

INT64_MAX = 2**63 - 1


def _check_int(value: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise TypeError(f"ring coordinates must be integers, got {value!r}")
    if not -INT64_MAX - 1 <= value <= INT64_MAX:
        raise OverflowError(f"ring coordinate {value} does not fit in 64 bits")
    return value


class RingElement:
    """Element of U(SO(2)) truncated at Z_K.

    ``so2`` is the SO(2) coordinate, ``zk`` maps k to the Z_k coordinate
    (missing keys are zero) and ``undefined`` lists Z_k coordinates with no
    value.  ``K`` is metadata: equality and hashing ignore it.
    """

    __slots__ = ("so2", "zk", "undefined", "K")

    def __init__(
        self,
        so2: int = 0,
        zk: Mapping[int, int] | None = None,
        K: int | None = None,
        undefined: Iterable[int] = (),
    ):
        zk = {int(k): _check_int(v) for k, v in (zk or {}).items()}
        undefined = frozenset(int(k) for k in undefined)
        keys = set(zk) | undefined
        if any(k < 1 for k in keys):
            raise ValueError("Z_k coordinates are indexed by k >= 1")
        if K is None:
            K = max(keys, default=1)
        if K < 1:
            raise ValueError(f"truncation bound must be positive, got {K}")
        beyond = [k for k in keys if k > K and (k in undefined or zk[k] != 0)]
        if beyond:
            raise ValueError(f"coordinates {sorted(beyond)} exceed truncation bound K={K}")
        self.so2 = _check_int(so2)
        self.zk = {k: v for k, v in sorted(zk.items()) if v != 0 and k not in undefined}
        self.undefined = undefined
        self.K = int(K)

    @classmethod
    def zero(cls, K: int = 1) -> "RingElement":
        return cls(0, {}, K)

    @classmethod
    def unit(cls, K: int = 1) -> "RingElement":
        return cls(1, {}, K)

    def __setattr__(self, name, value):
        if hasattr(self, "K"):
            raise AttributeError("RingElement is immutable")
        object.__setattr__(self, name, value)

    def coordinate(self, k: int) -> int | None:
        """Coordinate at Z_k (k = 0 means SO(2)); ``None`` if undefined."""
        if k == 0:
            return self.so2
        if k in self.undefined:
            return None
        return self.zk.get(k, 0)

    def is_defined(self, k: int) -> bool:
        return k == 0 or k not in self.undefined

    def truncate(self, K: int) -> "RingElement":
        return RingElement(
            self.so2,
            {k: v for k, v in self.zk.items() if k <= K},
            K,
            {k for k in self.undefined if k <= K},
        )

    def __eq__(self, other):
        if not isinstance(other, RingElement):
            return NotImplemented
        return (
            self.so2 == other.so2
            and self.zk == other.zk
            and self.undefined == other.undefined
        )

    def __hash__(self):
        return hash((self.so2, tuple(self.zk.items()), self.undefined))

    def __add__(self, other):
        if not isinstance(other, RingElement):
            return NotImplemented
        return add(self, other)

    def __neg__(self):
        return scalar_mul(-1, self)

    def __sub__(self, other):
        if not isinstance(other, RingElement):
            return NotImplemented
        return add(self, scalar_mul(-1, other))

    def __mul__(self, other):
        if isinstance(other, RingElement):
            return star(self, other)
        if isinstance(other, int) and not isinstance(other, bool):
            return scalar_mul(other, self)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, int) and not isinstance(other, bool):
            return scalar_mul(other, self)
        return NotImplemented

    def __repr__(self):
        parts = [f"{k}: {v}" for k, v in self.zk.items()]
        parts += [f"{k}: ?" for k in sorted(self.undefined)]
        return f"RingElement({self.so2}, {{{', '.join(parts)}}}, K={self.K})"

    def to_dict(self) -> dict:
        return {
            "so2": self.so2,
            "zk": {str(k): v for k, v in self.zk.items()},
            "undefined": sorted(self.undefined),
            "K": self.K,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "RingElement":
        return cls(
            int(data["so2"]),
            {int(k): int(v) for k, v in data.get("zk", {}).items()},
            data.get("K"),
            data.get("undefined", ()),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RingElement":
        return cls.from_dict(json.loads(text))


def _canonical(so2: int, zk: dict, K: int, undefined: frozenset) -> RingElement:
    # operands are already validated; only drop zeros and sort
    out = object.__new__(RingElement)
    object.__setattr__(out, "so2", so2)
    object.__setattr__(out, "zk", {k: zk[k] for k in sorted(zk) if zk[k] != 0})
    object.__setattr__(out, "undefined", undefined)
    object.__setattr__(out, "K", K)
    return out


ZERO = RingElement.zero()
UNIT = RingElement.unit()


def add(a: RingElement, b: RingElement) -> RingElement:
    undefined = a.undefined | b.undefined
    keys = (set(a.zk) | set(b.zk)) - undefined
    zk = {k: _check_int(a.zk.get(k, 0) + b.zk.get(k, 0)) for k in keys}
    return _canonical(_check_int(a.so2 + b.so2), zk, max(a.K, b.K), undefined)


def star(a: RingElement, b: RingElement) -> RingElement:
    """Twisted product: SO(2) part a0*b0, Z_k part a0*b_k + b0*a_k."""
    undefined = a.undefined | b.undefined
    keys = (set(a.zk) | set(b.zk)) - undefined
    zk = {k: _check_int(a.so2 * b.zk.get(k, 0) + b.so2 * a.zk.get(k, 0)) for k in keys}
    return _canonical(_check_int(a.so2 * b.so2), zk, max(a.K, b.K), undefined)


def scalar_mul(g: int, a: RingElement) -> RingElement:
    _check_int(g)
    zk = {k: _check_int(g * v) for k, v in a.zk.items()}
    return _canonical(_check_int(g * a.so2), zk, a.K, a.undefined)


def product_many(elems: Iterable[RingElement]) -> RingElement:
    """Left fold of :func:`star`; the empty product is the unit."""
    elems = list(elems)
    if not elems:
        return RingElement.unit()
    return reduce(star, elems)


def is_nonzero(a: RingElement) -> bool:
    # undefined coordinates never count as nonzero
    return a.so2 != 0 or bool(a.zk)


def nonzero_coordinates(a: RingElement) -> tuple[set[int], set[int]]:
    """Return ``(nonzero, undefined)`` coordinate indices (0 means SO(2))."""
    nonzero = set(a.zk)
    if a.so2 != 0:
        nonzero.add(0)
    return nonzero, set(a.undefined)
