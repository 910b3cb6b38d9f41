"""Finitely bounded ordered base structures, their ages and complete types.

A base structure is given by a relational signature with a distinguished
binary order symbol and a finite list of forbidden induced substructures
(bounds).  Age members are kept in canonical form: the domain ``0..n-1`` is
listed in increasing order, so two members are isomorphic iff they are equal.

Complete ``n``-types are stored as an equality partition of the positions
together with an age member on the blocks.  Positions and block indices are
0-based throughout the Python API.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence


class BaseError(ValueError):
    """Raised by :func:`validate_base`; carries one diagnostic per problem."""

    def __init__(self, kind: str, diagnostics: Sequence[str]):
        self.kind = kind
        self.diagnostics = list(diagnostics)
        super().__init__(f"{kind}: " + "; ".join(self.diagnostics))


class MalformedBound(BaseError):
    def __init__(self, diagnostics: Sequence[str]):
        super().__init__("MalformedBound", diagnostics)


class OrderNotTotal(BaseError):
    def __init__(self, diagnostics: Sequence[str]):
        super().__init__("OrderNotTotal", diagnostics)


class Inconsistent(ValueError):
    """Raised when partial type information cannot be assembled."""


@dataclass(frozen=True)
class Signature:
    symbols: tuple[tuple[str, int], ...]
    order_symbol: str

    def __post_init__(self):
        names = [name for name, _ in self.symbols]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate relation symbols in {names}")
        for name, arity in self.symbols:
            if arity < 1:
                raise ValueError(f"symbol {name} has non-positive arity {arity}")
        if self.order_symbol not in names or self.arity(self.order_symbol) != 2:
            raise ValueError(f"order symbol {self.order_symbol!r} must be declared binary")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.symbols)

    @property
    def max_arity(self) -> int:
        return max(arity for _, arity in self.symbols)

    def arity(self, name: str) -> int:
        for symbol, arity in self.symbols:
            if symbol == name:
                return arity
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(symbol == name for symbol, _ in self.symbols)


@dataclass(frozen=True)
class FinStruct:
    """A finite structure on ``{0..size-1}``.

    ``relations`` holds one ``(symbol, tuples)`` entry per signature symbol,
    in signature order, so equal structures compare and hash equal.
    """

    size: int
    relations: tuple[tuple[str, frozenset], ...]

    @classmethod
    def make(cls, sig: Signature, size: int,
             relations: Mapping[str, Iterable[Sequence[int]]] | None = None) -> "FinStruct":
        relations = dict(relations or {})
        unknown = set(relations) - set(sig.names)
        if unknown:
            raise KeyError(f"unknown symbols {sorted(unknown)}")
        return cls(size, tuple((name, frozenset(tuple(t) for t in relations.get(name, ())))
                               for name in sig.names))

    def rel(self, name: str) -> frozenset:
        for symbol, tuples in self.relations:
            if symbol == name:
                return tuples
        raise KeyError(name)

    def holds(self, name: str, tup: Sequence[int]) -> bool:
        return tuple(tup) in self.rel(name)

    def induced(self, elements: Sequence[int]) -> "FinStruct":
        """Substructure on ``elements``; element ``elements[i]`` becomes ``i``."""
        index = {e: i for i, e in enumerate(elements)}
        rels = []
        for name, tuples in self.relations:
            kept = frozenset(tuple(index[x] for x in t) for t in tuples
                             if all(x in index for x in t))
            rels.append((name, kept))
        return FinStruct(len(elements), tuple(rels))

    def key(self) -> tuple:
        return (self.size, tuple((name, tuple(sorted(ts))) for name, ts in self.relations))

    def diagram(self) -> str:
        atoms = [f"{name}({','.join(map(str, t))})"
                 for name, tuples in self.relations for t in sorted(tuples)]
        return " ".join(atoms)


def _check_struct(sig: Signature, A: FinStruct) -> list[str]:
    problems = []
    if tuple(name for name, _ in A.relations) != sig.names:
        problems.append("relation symbols do not match the signature")
        return problems
    for name, tuples in A.relations:
        arity = sig.arity(name)
        for t in sorted(tuples):
            if len(t) != arity:
                problems.append(f"{name}{t}: arity {len(t)} != {arity}")
            elif any(not 0 <= x < A.size for x in t):
                problems.append(f"{name}{t}: index out of range for size {A.size}")
    return problems


@dataclass(frozen=True)
class BaseStructure:
    signature: Signature
    bounds: tuple[FinStruct, ...]
    name: str = ""
    trusted_meta: tuple[str, ...] = ("ordered", "homogeneous", "ramsey")

    def __hash__(self) -> int:
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.signature, self.bounds, self.name))
            object.__setattr__(self, "_hash", h)
        return h

    @property
    def s(self) -> int:
        return max([1] + [b.size for b in self.bounds])

    @property
    def n_param(self) -> int:
        return max(self.s, self.signature.max_arity, 3)

    @property
    def kernel_arity(self) -> int:
        # types are determined by their subtypes of this length
        return max(self.signature.max_arity, 2)

    @property
    def order(self) -> str:
        return self.signature.order_symbol


# --------------------------------------------------------------------------
# embeddings and age membership


@lru_cache(maxsize=None)
def _bound_arities(base: BaseStructure) -> dict:
    return dict(base.signature.symbols)


def _embeds_sig(sig_arity: Mapping[str, int], B: FinStruct, A: FinStruct) -> bool:
    """Embedding test restricted to the symbols in ``sig_arity``."""
    if B.size > A.size:
        return False
    rels = [(name, B.rel(name), A.rel(name), arity) for name, arity in sig_arity.items()]
    image: list[int] = []
    used = [False] * A.size

    def consistent() -> bool:
        last = len(image) - 1
        k = len(image)
        for name, tb, ta, arity in rels:
            for t in itertools.product(range(k), repeat=arity):
                if last not in t:
                    continue
                if (t in tb) != (tuple(image[x] for x in t) in ta):
                    return False
        return True

    def extend() -> bool:
        if len(image) == B.size:
            return True
        for a in range(A.size):
            if used[a]:
                continue
            image.append(a)
            used[a] = True
            if consistent() and extend():
                return True
            image.pop()
            used[a] = False
        return False

    return extend()


@lru_cache(maxsize=None)
def in_age(base: BaseStructure, A: FinStruct) -> bool:
    """True iff no bound of ``base`` embeds into ``A`` as an induced substructure."""
    arities = _bound_arities(base)
    return not any(_embeds_sig(arities, B, A) for B in base.bounds)


def embeds(base: BaseStructure, B: FinStruct, A: FinStruct) -> bool:
    """Does ``B`` embed into ``A`` as an induced substructure?"""
    return _embeds_sig(_bound_arities(base), B, A)


# --------------------------------------------------------------------------
# validation


def validate_base(signature: Signature, bounds: Sequence[FinStruct], name: str = "") -> BaseStructure:
    """Build a :class:`BaseStructure` after checking the machine-checkable hypotheses.

    Every bound must be a well-formed structure over ``signature`` and, up to
    size ``max(s, 3)``, every member of the age must interpret the order symbol
    as a strict linear order.  Homogeneity and the Ramsey property are trusted.
    """
    problems = []
    for i, B in enumerate(bounds):
        problems += [f"bound #{i}: {p}" for p in _check_struct(signature, B)]
    if problems:
        raise MalformedBound(problems)
    base = BaseStructure(signature, tuple(bounds), name)
    bad = []
    layer = [FinStruct.make(signature, 0)]
    for size in range(1, max(base.s, 3) + 1):
        # labeled age members, grown one element at a time (the age is hereditary)
        layer = [B for A in layer for B in _add_labeled(A, signature) if in_age(base, B)]
        for A in layer:
            if not _is_strict_linear(size, A.rel(signature.order_symbol)):
                bad.append(f"age member of size {size} with {A.diagram() or 'no atoms'} "
                           f"does not order its domain linearly")
                if len(bad) >= 3:
                    break
        if bad:
            raise OrderNotTotal(bad)
    return base


def _add_labeled(A: FinStruct, sig: Signature) -> Iterator[FinStruct]:
    new = A.size
    size = A.size + 1
    slots = [(name, t) for name, arity in sig.symbols
             for t in itertools.product(range(size), repeat=arity) if new in t]
    for mask in range(1 << len(slots)):
        rels = {name: set(ts) for name, ts in A.relations}
        for i, (name, t) in enumerate(slots):
            if mask >> i & 1:
                rels[name].add(t)
        yield FinStruct.make(sig, size, rels)


def _is_strict_linear(size: int, less: set) -> bool:
    for a in range(size):
        if (a, a) in less:
            return False
        for b in range(a + 1, size):
            if ((a, b) in less) == ((b, a) in less):
                return False
    for a, b, c in itertools.permutations(range(size), 3):
        if (a, b) in less and (b, c) in less and (a, c) not in less:
            return False
    return True


# --------------------------------------------------------------------------
# ages


def _insert_block(base: BaseStructure, A: FinStruct, pos: int) -> Iterator[FinStruct]:
    """Age members obtained from the age member ``A`` by a new element at order rank ``pos``.

    Relies on heredity: the result is in the age iff every induced
    substructure of size at most ``s`` through the new element is.  Tuples
    through the new element are decided group by group (grouped by the set of
    old elements they touch), checking the small substructure after each group.
    """
    sig = base.signature
    size = A.size + 1
    shift = [i if i < pos else i + 1 for i in range(A.size)]
    old = [shift[i] for i in range(A.size)]
    order = sig.order_symbol
    rels = {name: {tuple(shift[x] for x in t) for t in tuples} for name, tuples in A.relations}
    rels[order] = {(i, j) for i in range(size) for j in range(i + 1, size)}
    others = [(name, arity) for name, arity in sig.symbols if name != order]
    groups = []
    for k in range(0, min(max(base.s, sig.max_arity), size) ):
        for S in itertools.combinations(old, k):
            elems = tuple(sorted(S + (pos,)))
            slots = [(name, t) for name, arity in others
                     for t in itertools.product(elems, repeat=arity) if set(t) == set(elems)]
            groups.append((elems, slots))

    memo = _local_memo(base)

    def local_ok(elems: tuple) -> bool:
        key = (len(elems),) + tuple(t in rels[name] for name, arity in sig.symbols
                                    for t in itertools.product(elems, repeat=arity))
        ok = memo.get(key)
        if ok is None:
            ok = memo[key] = _local_in_age(base, key)
        return ok

    def rec(g: int) -> Iterator[FinStruct]:
        if g == len(groups):
            yield FinStruct.make(sig, size, rels)
            return
        elems, slots = groups[g]
        for mask in range(1 << len(slots)):
            for i, (name, t) in enumerate(slots):
                if mask >> i & 1:
                    rels[name].add(t)
            if local_ok(elems):
                yield from rec(g + 1)
            for i, (name, t) in enumerate(slots):
                if mask >> i & 1:
                    rels[name].discard(t)

    yield from rec(0)


@lru_cache(maxsize=None)
def _local_memo(base: BaseStructure) -> dict:
    return {}


def _local_in_age(base: BaseStructure, key: tuple) -> bool:
    size, bits = key[0], iter(key[1:])
    rels = {name: [t for t in itertools.product(range(size), repeat=arity) if next(bits)]
            for name, arity in base.signature.symbols}
    return in_age(base, FinStruct.make(base.signature, size, rels))


@lru_cache(maxsize=None)
def _age_of_size(base: BaseStructure, size: int) -> tuple[FinStruct, ...]:
    sig = base.signature
    if size == 0:
        return (FinStruct.make(sig, 0),)
    found = set()
    for A in _age_of_size(base, size - 1):
        # append the new element on top; heredity makes this exhaustive
        found.update(_insert_block(base, A, A.size))
    return tuple(sorted(found, key=FinStruct.key))


def enumerate_age(base: BaseStructure, n: int) -> list[FinStruct]:
    """All canonical age members of size at most ``n``, sorted by size then atoms."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return [A for size in range(n + 1) for A in _age_of_size(base, size)]


def canonical_form(sig: Signature, A: FinStruct) -> FinStruct:
    """Relabel ``A`` so that its (linear) order becomes ``0 < 1 < ... < size-1``."""
    less = A.rel(sig.order_symbol)
    rank = sorted(range(A.size), key=lambda a: sum((b, a) in less for b in range(A.size)))
    return A.induced(rank)


# --------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class TypeRep:
    """Complete type of a tuple: equality partition plus ordered quotient."""

    arity: int
    partition: tuple[int, ...]
    quotient: FinStruct
    _key: tuple = field(init=False, repr=False, compare=False, hash=False)
    _hash: int = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "_key", (self.arity, self.partition, self.quotient.key()))
        object.__setattr__(self, "_hash", hash(self._key))

    # types are hashed constantly during search; keep it cheap
    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, TypeRep):
            return NotImplemented
        return self._hash == other._hash and self._key == other._key

    @property
    def blocks(self) -> int:
        return self.quotient.size

    def sort_key(self) -> tuple:
        return self._key

    def __lt__(self, other: "TypeRep") -> bool:
        return self._key < other._key

    def equal(self, i: int, j: int) -> bool:
        return self.partition[i] == self.partition[j]

    def holds(self, name: str, positions: Sequence[int]) -> bool:
        return self.quotient.holds(name, tuple(self.partition[i] for i in positions))

    def describe(self) -> str:
        eq = ",".join(map(str, self.partition))
        diagram = self.quotient.diagram()
        return f"arity={self.arity} partition={eq} diagram: {diagram}".rstrip()

    def __repr__(self) -> str:
        return f"TypeRep({self.partition}, {self.quotient.diagram()!r})"


def empty_type(sig: Signature) -> TypeRep:
    return TypeRep(0, (), FinStruct.make(sig, 0))


def subtype(t: TypeRep, idx: Sequence[int]) -> TypeRep:
    """Type of the projection onto positions ``idx`` (0-based; repeats and any order allowed)."""
    for i in idx:
        if not 0 <= i < t.arity:
            raise IndexError(f"position {i} out of range for arity {t.arity}")
    return _subtype(t, tuple(idx))


@lru_cache(maxsize=1 << 20)
def _subtype(t: TypeRep, idx: tuple[int, ...]) -> TypeRep:
    blocks = [t.partition[i] for i in idx]
    kept = sorted(set(blocks))
    renum = {b: i for i, b in enumerate(kept)}
    return TypeRep(len(idx), tuple(renum[b] for b in blocks), t.quotient.induced(kept))


def type_of(sig: Signature, A: FinStruct, tup: Sequence[int]) -> TypeRep:
    """Type of the tuple ``tup`` of elements of the (linearly ordered) structure ``A``."""
    less = A.rel(sig.order_symbol)
    distinct = sorted(set(tup), key=lambda a: sum((b, a) in less for b in set(tup)))
    renum = {a: i for i, a in enumerate(distinct)}
    return TypeRep(len(tup), tuple(renum[a] for a in tup), A.induced(distinct))


def extensions(base: BaseStructure, t: TypeRep) -> list[TypeRep]:
    """All types of arity ``t.arity + 1`` whose projection onto the first positions is ``t``."""
    return list(_extensions(base, t))


@lru_cache(maxsize=None)
def _extensions(base: BaseStructure, t: TypeRep) -> tuple[TypeRep, ...]:
    out = []
    for b in range(t.blocks):
        out.append(TypeRep(t.arity + 1, t.partition + (b,), t.quotient))
    for pos in range(t.blocks + 1):
        for Q in _insert_block(base, t.quotient, pos):
            part = tuple(b if b < pos else b + 1 for b in t.partition) + (pos,)
            out.append(TypeRep(t.arity + 1, part, Q))
    return tuple(sorted(out))


def types_extending(base: BaseStructure, t: TypeRep, extra: int) -> list[TypeRep]:
    """All types of arity ``t.arity + extra`` extending ``t`` on the first positions, sorted."""
    return list(_types_extending(base, t, extra))


@lru_cache(maxsize=None)
def _types_extending(base: BaseStructure, t: TypeRep, extra: int) -> tuple[TypeRep, ...]:
    layer = [t]
    for _ in range(extra):
        layer = [u for s in layer for u in _extensions(base, s)]
    return tuple(sorted(layer))


def enumerate_types(base: BaseStructure, n: int) -> list[TypeRep]:
    """All complete ``n``-types of the base, in canonical sort order."""
    if n < 1:
        raise ValueError("types have arity at least 1")
    return types_extending(base, empty_type(base.signature), n)


def assemble(base: BaseStructure, p: int, parts: Mapping[Sequence[int], TypeRep]) -> TypeRep:
    """The unique ``p``-type whose projections agree with every part.

    ``parts`` maps index tuples (0-based, increasing) to types of matching
    arity.  Raises :class:`Inconsistent` on conflicting atomic facts, broken
    equality transitivity, uncovered facts, or a result outside the age.
    """
    sig = base.signature
    parent = list(range(p))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    items = [(tuple(I), t) for I, t in parts.items()]
    covered = set()
    for I, t in items:
        if len(I) != t.arity:
            raise ValueError(f"part {I} has arity {t.arity}")
        covered.update(I)
        for a, b in itertools.combinations(range(len(I)), 2):
            if t.equal(a, b):
                parent[find(I[a])] = find(I[b])
    if covered != set(range(p)):
        raise ValueError(f"parts do not cover positions 0..{p - 1}")
    for I, t in items:
        for a, b in itertools.combinations(range(len(I)), 2):
            if not t.equal(a, b) and find(I[a]) == find(I[b]):
                raise Inconsistent(f"positions {I[a]},{I[b]} forced equal but part {I} separates them")
    roots = sorted({find(i) for i in range(p)})
    block_of = {r: i for i, r in enumerate(roots)}
    pos_block = [block_of[find(i)] for i in range(p)]
    nb = len(roots)
    facts: dict = {}
    for I, t in items:
        blocks_here = [pos_block[i] for i in I]
        # representative position in I for each block of t
        rep = {}
        for a, i in enumerate(I):
            rep.setdefault(t.partition[a], blocks_here[a])
        for name, arity in sig.symbols:
            rel = t.quotient.rel(name)
            for tup in itertools.product(range(t.blocks), repeat=arity):
                g = tuple(rep[x] for x in tup)
                val = tup in rel
                old = facts.setdefault((name, g), val)
                if old != val:
                    raise Inconsistent(f"{name}{g} both asserted and denied")
    rels = {name: set() for name in sig.names}
    for name, arity in sig.symbols:
        for g in itertools.product(range(nb), repeat=arity):
            if (name, g) not in facts:
                raise ValueError(f"fact {name}{g} not determined by the parts")
            if facts[(name, g)]:
                rels[name].add(g)
    Q = FinStruct.make(sig, nb, rels)
    if not in_age(base, Q):
        raise Inconsistent(f"assembled structure {Q.diagram()} is not in the age")
    C = canonical_form(sig, Q)
    perm = _rank_permutation(sig, Q)
    return TypeRep(p, tuple(perm[b] for b in pos_block), C)


def _rank_permutation(sig: Signature, Q: FinStruct) -> list[int]:
    less = Q.rel(sig.order_symbol)
    return [sum((b, a) in less for b in range(Q.size)) for a in range(Q.size)]


# --------------------------------------------------------------------------
# builtin bases


def bounds_from_patterns(sig: Signature,
                         patterns: Sequence[tuple[FinStruct, Sequence[str]]]) -> list[FinStruct]:
    """Minimal induced bounds equivalent to a list of partial forbidden patterns.

    A pattern ``(P, symbols)`` forbids every structure into which ``P`` embeds
    when only ``symbols`` are compared.  The result lists, up to isomorphism,
    the structures that are forbidden while all their proper induced
    substructures are not.
    """
    arities = dict(sig.symbols)
    checks = [({name: arities[name] for name in symbols}, P) for P, symbols in patterns]

    def forbidden(A: FinStruct) -> bool:
        return any(_embeds_sig(ar, P, A) for ar, P in checks)

    limit = max(P.size for P, _ in patterns)
    found: dict = {}
    layer = [FinStruct.make(sig, 0)]
    for size in range(1, limit + 1):
        allowed = []
        for A in layer:
            for B in _add_labeled(A, sig):
                subs = (B.induced([x for x in range(size) if x != drop]) for drop in range(size))
                if size > 1 and any(forbidden(S) for S in subs):
                    continue
                if forbidden(B):
                    canon = min((B.induced(perm) for perm in itertools.permutations(range(size))),
                                key=FinStruct.key)
                    found[canon.key()] = canon
                else:
                    allowed.append(B)
        layer = allowed
    return sorted(found.values(), key=FinStruct.key)


def _order_patterns(sig: Signature) -> list[tuple[FinStruct, tuple[str]]]:
    o = sig.order_symbol
    only = (o,)
    return [
        (FinStruct.make(sig, 1, {o: [(0, 0)]}), only),
        (FinStruct.make(sig, 2, {o: []}), only),
        (FinStruct.make(sig, 2, {o: [(0, 1), (1, 0)]}), only),
        (FinStruct.make(sig, 3, {o: [(0, 1), (1, 2), (2, 0)]}), only),
    ]


def dense_linear_order() -> BaseStructure:
    sig = Signature((("less", 2),), "less")
    return validate_base(sig, [P for P, _ in _order_patterns(sig)], "dense_linear_order")


def ordered_random_graph() -> BaseStructure:
    sig = Signature((("less", 2), ("edge", 2)), "less")
    patterns = _order_patterns(sig) + [
        (FinStruct.make(sig, 1, {"edge": [(0, 0)]}), ("edge",)),
        (FinStruct.make(sig, 2, {"edge": [(0, 1)]}), ("edge",)),
    ]
    return validate_base(sig, bounds_from_patterns(sig, patterns), "ordered_random_graph")


BUILTINS = {
    "dense_linear_order": dense_linear_order,
    "ordered_random_graph": ordered_random_graph,
}


@lru_cache(maxsize=None)
def builtin(name: str) -> BaseStructure:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise KeyError(f"unknown builtin base {name!r}; known: {sorted(BUILTINS)}") from None
