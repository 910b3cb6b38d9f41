"""Types over the base expanded by a tuple of constants.

A pointed ``n``-type over a constant tuple of type ``c`` (arity ``k``) is a
complete ``(k+n)``-type whose first ``k`` positions realize ``c``.  All of
the age machinery applies unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

from .age import BaseStructure, TypeRep, extensions, subtype, types_extending


@dataclass(frozen=True)
class PointedType:
    base_type: TypeRep
    full: TypeRep

    def __hash__(self) -> int:
        return hash(self.full) ^ (self.base_type.arity * 0x9E3779B1)

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, PointedType):
            return NotImplemented
        return self.full == other.full and self.base_type == other.base_type

    @property
    def k(self) -> int:
        return self.base_type.arity

    @property
    def n(self) -> int:
        return self.full.arity - self.base_type.arity

    def __lt__(self, other: "PointedType") -> bool:
        return (self.base_type.sort_key(), self.full.sort_key()) < \
            (other.base_type.sort_key(), other.full.sort_key())

    def __repr__(self) -> str:
        return f"PointedType(k={self.k}, {self.full!r})"


def pointed_space(base: BaseStructure, c: TypeRep, n: int) -> list[PointedType]:
    """All pointed ``n``-types over constants of type ``c``, sorted."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return list(_pointed_space(base, c, n))


@lru_cache(maxsize=None)
def _pointed_space(base: BaseStructure, c: TypeRep, n: int) -> tuple[PointedType, ...]:
    return tuple(PointedType(c, t) for t in types_extending(base, c, n))


def pointed_subtype(p: PointedType, idx: Sequence[int]) -> PointedType:
    """Project onto the free positions ``idx`` (0-based), keeping the constants."""
    for i in idx:
        if not 0 <= i < p.n:
            raise IndexError(f"free position {i} out of range for n={p.n}")
    return _pointed_subtype(p, tuple(idx))


@lru_cache(maxsize=1 << 20)
def _pointed_subtype(p: PointedType, idx: tuple[int, ...]) -> PointedType:
    k = p.k
    return PointedType(p.base_type, subtype(p.full, tuple(range(k)) + tuple(k + i for i in idx)))


def constant_self_type(c: TypeRep) -> PointedType:
    """The pointed ``k``-type whose free positions coincide with the constants."""
    k = c.arity
    return PointedType(c, TypeRep(2 * k, c.partition + c.partition, c.quotient))


def forget_constants(p: PointedType) -> TypeRep:
    """The plain type of the free part of ``p``."""
    k = p.k
    return subtype(p.full, tuple(range(k, k + p.n)))


def pointed_count(base: BaseStructure, c: TypeRep, n: int, limit: int) -> Optional[int]:
    """``len(pointed_space(base, c, n))``, or ``None`` as soon as it would exceed ``limit``.

    Walks the extension layers without caching them, so it stays cheap for
    spaces that are too large to search anyway.
    """
    layer = [c]
    for _ in range(n):
        nxt = []
        for t in layer:
            nxt.extend(extensions(base, t))
            if len(nxt) > limit:
                return None
        layer = nxt
    return len(layer)
