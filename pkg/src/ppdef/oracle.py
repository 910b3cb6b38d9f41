"""Independent cross-checks for the deciders.

* :func:`synthesize_pp` looks for an explicit primitive positive definition
  (YES side evidence).
* :func:`brute_partial_witness` looks for a finite partial operation on a
  small grid that preserves the template and breaks the target (NO side
  evidence).
* :func:`replay` rebuilds, at finite scale, the quotient construction that
  turns a behavior into an actual operation, and checks every step.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .age import (BaseStructure, FinStruct, TypeRep, empty_type, enumerate_types, extensions,
                  in_age, subtype, type_of)
from .behavior import Behavior, SearchProblem, extend, search
from .csp import Budget, ResourceLimit
from .formula import RelationDef
from .pointed import PointedType

EQ = "="


# --------------------------------------------------------------------------
# pp synthesis


@dataclass(frozen=True)
class PPFormula:
    """``exists y1..ye. atom & atom & ...`` over ``x1..xk, y1..ye``.

    Atoms are ``(symbol, positions)`` with 0-based positions; positions
    ``>= k`` are existential variables.  The symbol ``"="`` is equality.
    """

    k: int
    e: int
    atoms: tuple[tuple[str, tuple[int, ...]], ...]

    def _var(self, i: int) -> str:
        return f"x{i + 1}" if i < self.k else f"y{i - self.k + 1}"

    def to_text(self) -> str:
        parts = []
        for symbol, args in self.atoms:
            if symbol == EQ:
                parts.append(f"{self._var(args[0])} = {self._var(args[1])}")
            else:
                parts.append(f"{symbol}({','.join(self._var(a) for a in args)})")
        body = " & ".join(parts) if parts else "true"
        if self.e:
            prefix = " ".join(f"exists y{j + 1}." for j in range(self.e))
            return f"{prefix} {body}"
        return body

    def __str__(self) -> str:
        return self.to_text()


def _atom_holds(symbol: str, args: tuple[int, ...], t: TypeRep,
                relations: Mapping[str, RelationDef]) -> bool:
    if symbol == EQ:
        return t.equal(*args)
    rel = relations.get(symbol)
    if rel is not None:
        return subtype(t, args) in rel.type_set
    return t.holds(symbol, args)


def pp_semantics(phi: PPFormula, base: BaseStructure,
                 relations: Sequence[RelationDef] = ()) -> frozenset[TypeRep]:
    """Types of ``k``-tuples satisfying ``phi``.

    Atom symbols are looked up among ``relations`` first, then in the base
    signature.
    """
    rels = {r.name: r for r in relations}
    if phi.k + phi.e == 0:
        return frozenset()
    out = set()
    for t in enumerate_types(base, phi.k + phi.e):
        if all(_atom_holds(s, a, t, rels) for s, a in phi.atoms):
            out.add(subtype(t, tuple(range(phi.k))))
    return frozenset(out)


@dataclass
class SynthesisStats:
    states: int = 0
    levels: list = field(default_factory=list)


def synthesize_pp(target: RelationDef, theta: Sequence[RelationDef], base: BaseStructure,
                  max_vars: int = 2, max_atoms: int = 6, max_states: int = 200_000,
                  max_types: int = 20_000, stats: SynthesisStats | None = None) -> Optional[PPFormula]:
    """First pp formula (fewest existentials, then fewest atoms) defining ``target``, else ``None``.

    ``None`` only means the budgets were exhausted; it is not a verdict.
    """
    stats = stats or SynthesisStats()
    k = target.arity
    want = target.type_set
    theta = list({(r.arity, r.type_set): r for r in theta}.values())
    for e in range(max_vars + 1):
        V = k + e
        types = enumerate_types(base, V)
        if len(types) > max_types:
            stats.levels.append((e, "skipped"))
            continue
        heads = [subtype(t, tuple(range(k))) for t in types]
        good_masks = {}
        bad = 0
        for i, h in enumerate(heads):
            if h in want:
                good_masks[h] = good_masks.get(h, 0) | (1 << i)
            else:
                bad |= 1 << i
        if len(good_masks) < len(want):
            continue
        goods = list(good_masks.values())
        full = (1 << len(types)) - 1

        def covers(bits: int) -> bool:
            return all(bits & g for g in goods)

        atoms: list = []
        seen_bits = set()
        candidates = [(r.name, args) for r in theta for args in itertools.product(range(V), repeat=r.arity)]
        candidates += [(EQ, (i, j)) for i, j in itertools.combinations(range(V), 2)]
        rels = {r.name: r for r in theta}
        for symbol, args in candidates:
            bits = 0
            for i, t in enumerate(types):
                if _atom_holds(symbol, args, t, rels):
                    bits |= 1 << i
            if bits == full or bits in seen_bits or not covers(bits):
                continue
            seen_bits.add(bits)
            atoms.append((symbol, args, bits))
        if covers(full) and not full & bad:
            return PPFormula(k, e, ())
        parent: dict = {full: None}
        frontier = [full]
        for depth in range(1, max_atoms + 1):
            nxt = []
            for bits in frontier:
                for ai, (symbol, args, abits) in enumerate(atoms):
                    new = bits & abits
                    if new in parent or not covers(new):
                        continue
                    parent[new] = (bits, ai)
                    stats.states += 1
                    if not new & bad:
                        return PPFormula(k, e, _trace(parent, new, atoms))
                    nxt.append(new)
                    if stats.states >= max_states:
                        stats.levels.append((e, "state budget"))
                        return None
            frontier = nxt
            stats.levels.append((e, depth, len(frontier)))
            if not frontier:
                break
    return None


def _trace(parent: dict, bits: int, atoms: list) -> tuple:
    out = []
    while parent[bits] is not None:
        bits, ai = parent[bits]
        out.append((atoms[ai][0], atoms[ai][1]))
    return tuple(reversed(out))


# --------------------------------------------------------------------------
# finite partial witnesses


@dataclass
class PartialWitness:
    """A partial operation on a finite grid ``A_1 x ... x A_m``.

    ``A_j`` (``carriers[j]``) is an age member containing the ``j``-th
    constant tuple at positions ``ctuples[j]``.  ``points`` are the domain
    elements, ``image`` is the type of their images listed in the same
    order, and the constant rows are ``points[i]`` for ``i`` in
    ``violated_at``.
    """

    mode: str
    constants: tuple[TypeRep, ...]
    carriers: tuple[FinStruct, ...]
    ctuples: tuple[tuple[int, ...], ...]
    points: tuple[tuple[int, ...], ...]
    image: TypeRep
    violated_at: tuple[int, ...]

    @property
    def row_image(self) -> TypeRep:
        return subtype(self.image, self.violated_at)

    def table(self) -> dict:
        """Point -> block index of its image (blocks are ranked by the order)."""
        return {p: self.image.partition[i] for i, p in enumerate(self.points)}


def grid_points(ctuples: Sequence[tuple[int, ...]], carriers: Sequence[FinStruct]):
    """Grid points with the constant rows first, and the row indices."""
    k = len(ctuples[0])
    rows = [tuple(ct[j] for ct in ctuples) for j in range(k)]
    order = list(dict.fromkeys(rows))
    rest = [p for p in itertools.product(*(range(A.size) for A in carriers)) if p not in order]
    points = order + rest
    index = {p: i for i, p in enumerate(points)}
    return points, tuple(index[r] for r in rows)


def _grid_constraints(base, carriers, mode, theta, points):
    """(scope, allowed type set, must be inside) triples keyed by their last point."""
    by_last: dict = {}
    sig = base.signature
    for rel in theta:
        for scope in itertools.product(range(len(points)), repeat=rel.arity):
            inside = all(type_of(sig, A, [points[i][j] for i in scope]) in rel.type_set
                         for j, A in enumerate(carriers))
            if inside or mode == "ex":
                by_last.setdefault(max(scope), []).append((scope, rel.type_set, inside))
    return by_last


def is_partial_witness(base: BaseStructure, pw: PartialWitness, theta: Sequence[RelationDef],
                       target: RelationDef) -> bool:
    """Independent check of a partial witness against the template and the target."""
    sig = base.signature
    for c, A, ct in zip(pw.constants, pw.carriers, pw.ctuples):
        if not in_age(base, A) or type_of(sig, A, ct) != c:
            return False
    if pw.image.arity != len(pw.points) or pw.row_image in target.type_set:
        return False
    for scope_list in _grid_constraints(base, pw.carriers, pw.mode, theta, pw.points).values():
        for scope, allowed, inside in scope_list:
            if (subtype(pw.image, scope) in allowed) != inside:
                return False
    if pw.mode == "ex" and pw.image.blocks != len(pw.points):
        return False
    return True


def brute_partial_witness(problem, grid_size: int = 3, max_points: int = 36,
                          max_nodes: int = 200_000) -> Optional[PartialWitness]:
    """Exhaustive search for a finite partial witness (``problem`` is a deciders.Problem).

    Coordinate ``j`` ranges over an age member of ``grid_size`` elements
    (more if the constant tuple needs it) that contains the ``j``-th
    constant tuple; the image of the grid is built one point at a time as a
    type of the base.  In pp mode the constants are all target types, in
    ep/ex mode each target type in turn.  ``None`` is never evidence of
    definability, and a found witness is only necessary-condition evidence.
    """
    base, mode = problem.base, problem.mode
    types = sorted(problem.target.type_set)
    if not types:
        return None
    choices = [tuple(types)] if mode == "pp" else [(c,) for c in types]
    for constants in choices:
        members = [pointed_member(base, c, max(grid_size, c.blocks)) for c in constants]
        carriers = tuple(A for A, _ in members)
        ctuples = tuple(ct for _, ct in members)
        points, rows = grid_points(ctuples, carriers)
        if len(points) > max_points:
            continue
        found = _grid_search(base, mode, carriers, problem.theta, problem.target,
                             points, rows, max_nodes)
        if found is not None:
            return PartialWitness(mode, constants, carriers, ctuples, tuple(points), found, rows)
    return None


def _grid_search(base, mode, carriers, theta, target, points, rows, max_nodes):
    by_last = _grid_constraints(base, carriers, mode, theta, points)
    last_row = max(rows)
    nodes = 0
    start = empty_type(base.signature)
    stack = [iter(_next_images(base, start, mode))]
    while stack:
        t = next(stack[-1], None)
        if t is None:
            stack.pop()
            continue
        nodes += 1
        if nodes > max_nodes:
            return None
        i = t.arity - 1
        ok = all((subtype(t, scope) in allowed) == inside for scope, allowed, inside in by_last.get(i, ()))
        if ok and i == last_row:
            ok = subtype(t, rows) not in target.type_set
        if not ok:
            continue
        if t.arity == len(points):
            return t
        stack.append(iter(_next_images(base, t, mode)))
    return None


def _next_images(base: BaseStructure, t: TypeRep, mode: str) -> list[TypeRep]:
    ext = extensions(base, t)
    if mode == "ex":
        return [u for u in ext if u.blocks == t.blocks + 1]
    # reuse existing elements first: collapsing images are the common witnesses
    return sorted(ext, key=lambda u: (u.blocks, u))


def extends_to_behavior(pw: PartialWitness, problem, budget: Budget | None = None) -> Optional[Behavior]:
    """A full behavior with the same constants whose violation image is the witness's row image."""
    sp = SearchProblem(problem.base, pw.constants, problem.mode, tuple(problem.theta),
                       problem.target, violation_image=pw.row_image)
    try:
        return search(sp, budget)
    except ResourceLimit:
        return None


# --------------------------------------------------------------------------
# replay


class ReplayFailure(AssertionError):
    def __init__(self, report: "ReplayReport"):
        self.report = report
        failed = [name for name, ok, _ in report.checks if not ok]
        super().__init__(f"replay failed: {', '.join(failed)}")


@dataclass
class QuotientStructure:
    carrier: tuple[FinStruct, ...]
    constants: tuple[tuple[int, ...], ...]
    points: tuple[tuple[int, ...], ...]
    classes: tuple[int, ...]
    quotient: Optional[FinStruct]


@dataclass
class ReplayReport:
    sizes: tuple[int, ...]
    structure: Optional[QuotientStructure] = None
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return bool(self.checks) and all(ok for _, ok, _ in self.checks)

    def add(self, name: str, ok: bool, detail: str = "") -> bool:
        self.checks.append((name, ok, detail))
        return ok

    def lines(self) -> list[str]:
        return [f"sizes={','.join(map(str, self.sizes))} {name}: {'pass' if ok else 'FAIL'}"
                + (f" ({detail})" if detail else "") for name, ok, detail in self.checks]


def pointed_member(base: BaseStructure, c: TypeRep, size: int) -> tuple[FinStruct, tuple[int, ...]]:
    """An age member with ``size`` elements containing a tuple of type ``c``.

    New elements are added greedily, each time preferring one whose type
    over the constants is not yet realized.
    """
    if size < c.blocks:
        raise ValueError(f"size {size} too small for a tuple with {c.blocks} distinct entries")
    k = c.arity
    t = c
    realized = set()
    while t.blocks < size:
        options = [u for u in extensions(base, t) if u.blocks == t.blocks + 1]
        if not options:
            raise ValueError("the age has no member of the requested size")
        fresh = [u for u in options
                 if subtype(u, tuple(range(k)) + (u.arity - 1,)) not in realized]
        u = (fresh or options)[0]
        realized.add(subtype(u, tuple(range(k)) + (u.arity - 1,)))
        t = u
    # elements are the blocks of t; the constants sit at the first k positions
    return t.quotient, tuple(t.partition[:k])


def _pointed(base, A: FinStruct, c: TypeRep, ctuple, elems) -> PointedType:
    return PointedType(c, type_of(base.signature, A, tuple(ctuple) + tuple(elems)))


def replay(witness: Behavior, problem: SearchProblem, sizes: Sequence[int] | None = None,
           raise_on_failure: bool = True) -> ReplayReport:
    """Finite-scale rebuild of the operation described by ``witness``.

    Checks that the kernel relation of the images is an equivalence, that
    the induced relations are well defined on classes, that every small
    substructure of the quotient lies in the age, that the template is
    preserved on the grid and that the target is violated at the constants.
    """
    base = problem.base
    sig = base.signature
    constants = problem.constants
    m = len(constants)
    k = constants[0].arity
    sizes = tuple(sizes) if sizes is not None else (k + 2,) * m
    report = ReplayReport(sizes)
    members = [pointed_member(base, c, size) for c, size in zip(constants, sizes)]
    carriers = tuple(A for A, _ in members)
    ctuples = tuple(ct for _, ct in members)
    points = list(itertools.product(*(range(A.size) for A in carriers)))
    index = {p: i for i, p in enumerate(points)}

    def image(tup) -> TypeRep:
        args = tuple(_pointed(base, carriers[j], constants[j], ctuples[j], [p[j] for p in tup])
                     for j in range(m))
        return extend(witness, args)

    # the relation ~ from 2-type images
    N = len(points)
    sim = [[image((points[a], points[b])).equal(0, 1) for b in range(N)] for a in range(N)]
    parent = list(range(N))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a in range(N):
        for b in range(N):
            if sim[a][b]:
                parent[find(a)] = find(b)
    reflexive = all(sim[a][a] for a in range(N))
    symmetric = all(sim[a][b] == sim[b][a] for a in range(N) for b in range(N))
    transitive = all(sim[a][b] == (find(a) == find(b)) for a in range(N) for b in range(N))
    report.add("equivalence", reflexive and symmetric and transitive,
               f"{N} points" + ("" if reflexive else ", not reflexive")
               + ("" if symmetric else ", not symmetric") + ("" if transitive else ", not transitive"))
    roots = list(dict.fromkeys(find(a) for a in range(N)))
    cls_of = {r: i for i, r in enumerate(roots)}
    classes = tuple(cls_of[find(a)] for a in range(N))
    C = len(roots)

    # relations of the product structure, checked to be well defined on classes
    facts: dict = {}
    clash = None
    for name, arity in sig.symbols:
        for tup in itertools.product(range(N), repeat=arity):
            val = image(tuple(points[i] for i in tup)).holds(name, tuple(range(arity)))
            key = (name, tuple(classes[i] for i in tup))
            old = facts.setdefault(key, val)
            if old != val and clash is None:
                clash = f"{name}{key[1]}"
    report.add("well-defined", clash is None, clash or f"{C} classes")
    rels = {name: [g for (n, g), v in facts.items() if n == name and v] for name in sig.names}
    Q = FinStruct.make(sig, C, rels)
    report.structure = QuotientStructure(carriers, ctuples, tuple(points), classes, Q)

    bad_subset = None
    for size in range(1, min(base.s, C) + 1):
        for subset in itertools.combinations(range(C), size):
            if not in_age(base, Q.induced(subset)):
                bad_subset = subset
                break
        if bad_subset:
            break
    report.add("age", bad_subset is None,
               f"substructure on classes {bad_subset} not in the age" if bad_subset
               else f"all substructures up to size {min(base.s, C)}")

    def qtype(tup) -> TypeRep:
        return type_of(sig, Q, [classes[index[p]] for p in tup])

    broken = None
    for rel in problem.theta:
        per_coord = []
        for j in range(m):
            A = carriers[j]
            members_in, members_out = [], []
            for tup in itertools.product(range(A.size), repeat=rel.arity):
                (members_in if type_of(sig, A, tup) in rel.type_set else members_out).append(tup)
            per_coord.append((members_in, members_out))
        for combo in itertools.product(*(pc[0] for pc in per_coord)):
            tup = tuple(zip(*combo))
            if qtype(tup) not in rel.type_set:
                broken = f"{rel.name} at {tup}"
                break
        if broken is None and problem.mode == "ex":
            for combo in itertools.product(*(pc[1] for pc in per_coord)):
                tup = tuple(zip(*combo))
                if qtype(tup) in rel.type_set:
                    broken = f"complement of {rel.name} at {tup}"
                    break
        if broken:
            break
    if broken is None and problem.mode == "ex" and C != N:
        broken = "injectivity"
    report.add("preservation", broken is None, broken or "")

    if problem.target is not None:
        rows = tuple(tuple(ctuples[j][i] for j in range(m)) for i in range(k))
        img = qtype(rows)
        report.add("violation", img not in problem.target.type_set,
                   f"image of constants: {img.describe()}")
    if raise_on_failure and not report.ok:
        raise ReplayFailure(report)
    return report


def default_sizes(problem: SearchProblem) -> list[tuple[int, ...]]:
    k = problem.constants[0].arity
    return [(k + 1,) * problem.m, (k + 2,) * problem.m]
