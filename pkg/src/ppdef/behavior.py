"""Behaviors of canonical operations and the search for witnesses.

A behavior of an ``m``-ary operation that is canonical over the expansions
``(base, c_1), ..., (base, c_m)`` assigns to every ``m``-tuple of pointed
types an output type of the same arity.  Because every type is determined by
its subtypes of length ``r = max(max_arity, 2)``, a behavior is stored by its
*kernel*, the restriction to pointed ``r``-types; values at other arities are
obtained by projection (arity below ``r``) or by assembly (arity above).

The search encodes the three conditions a witness has to satisfy (subtype
compatibility, violation of the target at the constants, preservation of
the template) as table constraints over kernel cells, then solves them with
:class:`ppdef.csp.TableCSP`.  Every returned behavior is re-verified with
the independent checks in this module, which only use projection and
assembly of types.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from .age import (BaseStructure, Inconsistent, TypeRep, _subtype, assemble, empty_type,
                  enumerate_types, subtype)
from .csp import Budget, ResourceLimit, TableCSP
from .formula import RelationDef
from .pointed import (PointedType, _pointed_subtype, constant_self_type, forget_constants,
                      pointed_space, pointed_subtype)

MODES = ("pp", "ep", "ex", "identity")

# sigma(t1, t2, t3, t3) = sigma(t2, t3, t1, t2)
SIGGERS_IDENTITY = ((0, 1, 2, 2), (1, 2, 0, 1))


class ExtensionInconsistent(RuntimeError):
    """A behavior could not be extended to a larger arity (broken compatibility)."""


class InvalidProblem(ValueError):
    pass


@dataclass(frozen=True)
class SearchProblem:
    base: BaseStructure
    constants: tuple[TypeRep, ...]
    mode: str
    theta: tuple[RelationDef, ...]
    target: Optional[RelationDef] = None
    identities: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...] = ()
    violation_image: Optional[TypeRep] = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidProblem(f"unknown mode {self.mode!r}")
        if self.mode == "identity":
            if self.target is not None:
                raise InvalidProblem("identity mode takes no target")
            if any(c.arity for c in self.constants):
                raise InvalidProblem("identity mode takes no constants")
            width = {len(side) for pair in self.identities for side in pair}
            if width - {self.m}:
                raise InvalidProblem("identity patterns must have one entry per coordinate")
            return
        if self.target is None:
            raise InvalidProblem(f"mode {self.mode} needs a target relation")
        if not self.constants:
            raise InvalidProblem("at least one coordinate is required")
        if self.mode in ("ep", "ex") and self.m != 1:
            raise InvalidProblem(f"mode {self.mode} searches unary behaviors")
        for c in self.constants:
            if c.arity != self.target.arity or c not in self.target.type_set:
                raise InvalidProblem(f"constant type {c!r} is not a type of {self.target.name}")
        if self.violation_image is not None and self.violation_image in self.target.type_set:
            raise InvalidProblem("pinned violation image lies inside the target")

    @classmethod
    def identity(cls, base: BaseStructure, gamma: Sequence[RelationDef],
                 identities=(SIGGERS_IDENTITY,)) -> "SearchProblem":
        m = len(identities[0][0])
        e = empty_type(base.signature)
        return cls(base, (e,) * m, "identity", tuple(gamma), None, tuple(identities))

    @property
    def m(self) -> int:
        return len(self.constants)

    @property
    def n(self) -> int:
        return self.base.n_param

    @property
    def r(self) -> int:
        return self.base.kernel_arity


# --------------------------------------------------------------------------
# windows


def windows(p: int, r: int) -> tuple[tuple[int, ...], ...]:
    """Index lists of length ``r`` whose subtypes determine a ``p``-type."""
    if p >= r:
        return tuple(itertools.combinations(range(p), r))
    return (tuple(range(p)) + (p - 1,) * (r - p),)


def all_lists(a: int, length: int) -> Iterator[tuple[int, ...]]:
    return itertools.product(range(a), repeat=length)


# --------------------------------------------------------------------------
# behaviors


@dataclass
class Behavior:
    base: BaseStructure
    constants: tuple[TypeRep, ...]
    kernel: dict = field(repr=False)
    stats: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def m(self) -> int:
        return len(self.constants)

    @property
    def r(self) -> int:
        return self.base.kernel_arity

    @property
    def n(self) -> int:
        return self.base.n_param

    @cached_property
    def _assembly(self) -> dict:
        return {}

    def table(self, arity: Optional[int] = None) -> dict:
        """All values at ``arity`` (default: the working arity ``n``)."""
        arity = self.n if arity is None else arity
        spaces = [pointed_space(self.base, c, arity) for c in self.constants]
        return {args: extend(self, args) for args in itertools.product(*spaces)}


def extend(b: Behavior, args: Sequence[PointedType]) -> TypeRep:
    """Value of the behavior on an ``m``-tuple of pointed types of any common arity."""
    args = tuple(args)
    if len(args) != b.m:
        raise ValueError(f"expected {b.m} arguments")
    p = args[0].n
    if any(a.n != p for a in args):
        raise ValueError("arguments must have the same free arity")
    r = b.r
    if p <= r:
        (L,) = windows(p, r)
        cell = tuple(pointed_subtype(a, L) for a in args)
        try:
            u = b.kernel[cell]
        except KeyError:
            raise ExtensionInconsistent(f"no kernel entry for {cell!r}") from None
        return subtype(u, tuple(range(p)))
    wins = windows(p, r)
    values = []
    for I in wins:
        cell = tuple(pointed_subtype(a, I) for a in args)
        try:
            values.append(b.kernel[cell])
        except KeyError:
            raise ExtensionInconsistent(f"no kernel entry for {cell!r}") from None
    key = (p, tuple(values))
    memo = b._assembly
    if key not in memo:
        try:
            memo[key] = assemble(b.base, p, dict(zip(wins, values)))
        except Inconsistent as exc:
            memo[key] = exc
    res = memo[key]
    if isinstance(res, Exception):
        raise ExtensionInconsistent(str(res))
    return res


@dataclass
class Conflict:
    first: tuple
    second: tuple
    first_index: tuple[int, ...]
    second_index: tuple[int, ...]
    message: str = ""


def check_table_compatibility(table: Mapping[tuple, TypeRep]) -> Optional[Conflict]:
    """Look for two entries whose arguments agree on an index list but whose values do not.

    Index lists may repeat and permute positions; this subsumes both the
    subset condition and the requirement that equal arguments have equal
    images.  Only lists of full length are needed: a shorter list is a
    projection of its padding by a repeated index.  Returns the first
    conflict found, or ``None``.
    """
    seen: dict = {}
    proj: dict = {}
    lists: dict = {}
    ids: dict = {}  # interned projections keep the hot keys tuples of ints

    def intern(x) -> int:
        return ids.setdefault(x, len(ids))

    for args, u in table.items():
        a = u.arity
        if a not in lists:
            lists[a] = list(all_lists(a, a))
        Ls = lists[a]
        cols = []
        for p in args:
            row = proj.get(p)
            if row is None:
                row = proj[p] = tuple(intern(_pointed_subtype(p, L)) for L in Ls)
            cols.append(row)
        vrow = proj.get(u)
        if vrow is None:
            vrow = proj[u] = tuple(intern(_subtype(u, L)) for L in Ls)
        # sigma(args o L) must equal sigma(args) o L, so key on the projected arguments alone
        for li, key in enumerate(zip(*cols)):
            key = (a,) + key
            val = vrow[li]
            old = seen.get(key)
            if old is None:
                seen[key] = (val, args, li)
            elif old[0] != val:
                L0, L = Ls[old[2]], Ls[li]
                return Conflict(old[1], args, L0, L,
                                f"projections {L0} and {L} meet but their values differ: "
                                f"{_subtype(table[old[1]], L0)!r} vs {_subtype(u, L)!r}")
    return None


def check_compatibility(b: Behavior | Mapping, full_table_limit: int = 5000) -> Optional[Conflict]:
    """``None`` if the behavior is compatible, otherwise a witnessing conflict.

    For a :class:`Behavior` the kernel is checked, then every entry at the
    working arity is assembled.  A compatible kernel whose entries all
    assemble yields a compatible table at every arity (each projection of
    an assembled value is fixed by kernel values), so the direct check of
    the working-arity table is only run when that table is small.
    """
    if not isinstance(b, Behavior):
        return check_table_compatibility(b)
    conflict = check_table_compatibility(b.kernel)
    if conflict:
        return conflict
    spaces = [pointed_space(b.base, c, b.n) for c in b.constants]
    count = math.prod(len(s) for s in spaces)
    table = {}
    for args in itertools.product(*spaces):
        try:
            table[args] = extend(b, args)
        except ExtensionInconsistent as exc:
            return Conflict(args, args, (), (), f"entry cannot be assembled: {exc}")
    if count <= full_table_limit:
        return check_table_compatibility(table)
    return None


def self_args(constants: Sequence[TypeRep]) -> tuple[PointedType, ...]:
    return tuple(constant_self_type(c) for c in constants)


def check_violation(b: Behavior, problem: SearchProblem) -> bool:
    """Does the behavior send the constants outside the target relation?"""
    image = extend(b, self_args(problem.constants))
    return image not in problem.target.type_set


def _member_args(base, constants, rel: RelationDef, inside: bool = True):
    per_coord = []
    for c in constants:
        space = pointed_space(base, c, rel.arity)
        per_coord.append([p for p in space if (forget_constants(p) in rel.type_set) == inside])
    return itertools.product(*per_coord)


def check_preservation(b: Behavior, problem: SearchProblem) -> Optional[str]:
    """Name of the first template relation (or condition) that is not preserved, else ``None``."""
    base = problem.base
    for rel in problem.theta:
        for args in _member_args(base, problem.constants, rel):
            if extend(b, args) not in rel.type_set:
                return rel.name
        if problem.mode == "ex":
            for args in _member_args(base, problem.constants, rel, inside=False):
                if extend(b, args) in rel.type_set:
                    return f"complement of {rel.name}"
    if problem.mode == "ex":
        for (p,) in itertools.product(pointed_space(base, problem.constants[0], 2)):
            free = forget_constants(p)
            if not free.equal(0, 1) and extend(b, (p,)).equal(0, 1):
                return "injectivity"
    return None


def check_identities(b: Behavior, identities, arity: Optional[int] = None) -> Optional[tuple]:
    """Verify every identity on all tuples of plain types; return a failing instance or ``None``."""
    arity = b.n if arity is None else arity
    e = empty_type(b.base.signature)
    types = [PointedType(e, t) for t in enumerate_types(b.base, arity)]
    for lhs, rhs in identities:
        count = max(lhs + rhs) + 1
        for ts in itertools.product(types, repeat=count):
            left = extend(b, tuple(ts[i] for i in lhs))
            right = extend(b, tuple(ts[i] for i in rhs))
            if left != right:
                return (lhs, rhs, tuple(t.full for t in ts))
    return None


def verify(b: Behavior, problem: SearchProblem) -> list[str]:
    """All failed checks for ``b`` as a witness of ``problem`` (empty list when accepted)."""
    failures = []
    conflict = check_compatibility(b)
    if conflict:
        failures.append(f"compatibility: {conflict.message}")
        return failures
    if problem.target is not None and not check_violation(b, problem):
        failures.append("violation: constants are mapped into the target")
    if problem.violation_image is not None and \
            extend(b, self_args(problem.constants)) != problem.violation_image:
        failures.append("violation: image differs from the pinned type")
    broken = check_preservation(b, problem)
    if broken:
        failures.append(f"preservation: {broken}")
    if problem.identities:
        bad = check_identities(b, problem.identities)
        if bad:
            failures.append(f"identity: fails on {bad}")
    return failures


# --------------------------------------------------------------------------
# search


class _Coordinate:
    """Kernel space of one coordinate and its projection tables."""

    def __init__(self, base: BaseStructure, c: TypeRep, r: int):
        self.space = pointed_space(base, c, r)
        self.index = {p: i for i, p in enumerate(self.space)}
        self.c = c

    def proj(self, i: int, L: tuple[int, ...]) -> int:
        return self.index[pointed_subtype(self.space[i], L)]


@lru_cache(maxsize=None)
def _coordinate(base: BaseStructure, c: TypeRep) -> _Coordinate:
    return _Coordinate(base, c, base.kernel_arity)


class _Encoding:
    def __init__(self, problem: SearchProblem, budget: Budget):
        base = problem.base
        self.problem = problem
        self.r = r = problem.r
        self.n = problem.n
        self.values = enumerate_types(base, r)
        self.vindex = {t: i for i, t in enumerate(self.values)}
        self.coords = [_coordinate(base, c) for c in problem.constants]
        self.radix = [len(co.space) for co in self.coords]
        self.ncells = math.prod(self.radix)
        self.csp = TableCSP()
        self.budget = budget
        full = (1 << len(self.values)) - 1
        self.csp.add_vars(self.ncells, full)

    def cell(self, idx: Sequence[int]) -> int:
        v = 0
        for i, x in zip(idx, self.radix):
            v = v * x + i
        return v

    def cell_of(self, args: Sequence[PointedType]) -> int:
        return self.cell([co.index[a] for co, a in zip(self.coords, args)])

    def decode(self, var: int) -> tuple[int, ...]:
        out = []
        for x in reversed(self.radix):
            var, i = divmod(var, x)
            out.append(i)
        return tuple(reversed(out))

    def window_table(self, types: Iterable[TypeRep], p: int) -> int:
        wins = windows(p, self.r)
        return self.csp.table(tuple(self.vindex[subtype(t, I)] for I in wins) for t in types)

    def scope(self, args: Sequence[PointedType]) -> tuple[int, ...]:
        p = args[0].n
        return tuple(self.cell_of([pointed_subtype(a, I) for a in args]) for I in windows(p, self.r))

    # ------------------------------------------------------------------

    def build(self) -> None:
        problem = self.problem
        self._estimate()
        self._projections()
        self._assembly()
        if problem.target is not None:
            self._violation()
        for rel in problem.theta:
            self._preservation(rel)
        if problem.mode == "ex":
            self._injectivity()
        self._identities()

    def _estimate(self) -> None:
        problem = self.problem
        base = problem.base
        count = self.ncells * (self.r ** self.r)
        if self.n > self.r:
            count += math.prod(len(pointed_space(base, c, self.n)) for c in problem.constants)
        for rel in problem.theta:
            sizes = [len(pointed_space(base, c, rel.arity)) for c in problem.constants]
            count += math.prod(sizes)
        self.budget.check_size(count)

    def _projections(self) -> None:
        r = self.r
        csp = self.csp
        identity = tuple(range(r))
        coords = self.coords
        for L in all_lists(r, r):
            if L == identity:
                continue
            tid = csp.table((v, self.vindex[subtype(t, L)]) for v, t in enumerate(self.values))
            proj = [[co.proj(i, L) for i in range(len(co.space))] for co in coords]
            for var in range(self.ncells):
                idx = self.decode(var)
                other = self.cell([proj[j][i] for j, i in enumerate(idx)])
                csp.add((var, other), tid)

    def _assembly(self) -> None:
        n, r = self.n, self.r
        if n <= r:
            return
        base = self.problem.base
        tid = self.window_table(enumerate_types(base, n), n)
        wins = windows(n, r)
        per_coord = []
        for co in self.coords:
            rows = []
            for P in pointed_space(base, co.c, n):
                rows.append(tuple(co.index[_pointed_subtype(P, I)] for I in wins))
            per_coord.append(rows)
        add, cell = self.csp.add, self.cell
        for combo in itertools.product(*per_coord):
            add(tuple(cell(col) for col in zip(*combo)), tid)

    def _violation(self) -> None:
        problem = self.problem
        k = problem.target.arity
        if problem.violation_image is not None:
            allowed = [problem.violation_image]
        else:
            allowed = [t for t in enumerate_types(problem.base, k) if t not in problem.target.type_set]
        self.csp.add(self.scope(self_args(problem.constants)), self.window_table(allowed, k))

    def _preservation(self, rel: RelationDef) -> None:
        problem = self.problem
        inside = self.window_table(sorted(rel.type_set), rel.arity)
        for args in _member_args(problem.base, problem.constants, rel):
            self.csp.add(self.scope(args), inside)
        if problem.mode == "ex":
            outside = self.window_table(
                [t for t in enumerate_types(problem.base, rel.arity) if t not in rel.type_set], rel.arity)
            for args in _member_args(problem.base, problem.constants, rel, inside=False):
                self.csp.add(self.scope(args), outside)

    def _injectivity(self) -> None:
        r = self.r
        co = self.coords[0]
        for var, p in enumerate(co.space):
            free = forget_constants(p)
            mask = 0
            for v, t in enumerate(self.values):
                if all(t.equal(i, j) <= free.equal(i, j) for i, j in itertools.combinations(range(r), 2)):
                    mask |= 1 << v
            self.csp.restrict(var, mask)

    def _identities(self) -> None:
        problem = self.problem
        if not problem.identities:
            return
        tid = self.csp.table((v, v) for v in range(len(self.values)))
        coords = self.coords
        for lhs, rhs in problem.identities:
            count = max(lhs + rhs) + 1
            # coordinates carry no constants, so every coordinate space is the plain type space
            space = coords[0].space
            for ts in itertools.product(range(len(space)), repeat=count):
                left = self.cell([ts[i] for i in lhs])
                right = self.cell([ts[i] for i in rhs])
                if left != right:
                    self.csp.add((left, right), tid)

    # ------------------------------------------------------------------

    def value_order(self, var: int) -> list[int]:
        mode = self.problem.mode
        idx = self.decode(var)
        frees = [forget_constants(co.space[i]) for co, i in zip(self.coords, idx)]
        if mode == "ep":
            order = sorted(range(len(self.values)), key=lambda v: (self.values[v].blocks, v))
            return order
        preferred = [self.vindex[f] for f in frees]
        return list(dict.fromkeys(preferred))

    def var_order(self) -> list[int]:
        degree = [len(w) for w in self.csp.watch]
        return sorted(range(self.ncells), key=lambda v: (-degree[v], v))

    def behavior(self, solution: Sequence[int]) -> Behavior:
        kernel = {}
        for var in range(self.ncells):
            idx = self.decode(var)
            kernel[tuple(co.space[i] for co, i in zip(self.coords, idx))] = self.values[solution[var]]
        return Behavior(self.problem.base, self.problem.constants, kernel)


def search(problem: SearchProblem, budget: Budget | None = None,
           stats: Optional[dict] = None) -> Optional[Behavior]:
    """A complete compatible behavior meeting the mode's conditions, or ``None`` when none exists.

    Raises :class:`ResourceLimit` when the budget runs out; that outcome is
    never to be read as an answer.
    """
    budget = budget or Budget()
    budget.check(0)
    if budget.nodes == 0:
        raise ResourceLimit("node budget 0")
    enc = _Encoding(problem, budget)
    enc.build()
    solution = enc.csp.solve(budget, enc.value_order, enc.var_order())
    if stats is not None:
        stats.update(cells=enc.ncells, constraints=enc.csp.size, nodes=enc.csp.nodes)
    if solution is None:
        return None
    b = enc.behavior(solution)
    b.stats.update(cells=enc.ncells, constraints=enc.csp.size, nodes=enc.csp.nodes)
    failures = verify(b, problem)
    if failures:
        raise AssertionError(f"search produced a behavior failing its checks: {failures}")
    return b
