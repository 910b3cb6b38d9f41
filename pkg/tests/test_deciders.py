import itertools

import pytest

from ppdef.deciders import (DEFINABLE, INCONCLUSIVE, NOT_DEFINABLE, SATISFIED, UNSATISFIED,
                            DeciderConfig, Problem, arity_bound, arity_cap, check_identity, decide)
from ppdef.formula import RelationDef


def R(base, name, text, arity):
    return RelationDef.from_text(name, text, arity, base)


def test_short_circuits(dlo):
    lt = R(dlo, "Lt", "x1<x2", 2)
    full = R(dlo, "Full", "x1<x2 | !(x1<x2)", 2)
    same = R(dlo, "Lt2", "less(x1,x2)", 2)
    for target, reason in [(full, "full target"), (same, "target equals Lt")]:
        d = decide(Problem(dlo, target, (lt,), "pp"))
        assert d.verdict == DEFINABLE and d.diagnostics["short_circuit"] == reason


def test_arity_helpers(dlo, org):
    betw = R(dlo, "Betw", "(x1<x2 & x2<x3) | (x3<x2 & x2<x1)", 3)
    assert arity_bound(Problem(dlo, betw, (), "pp")) == 2
    assert arity_cap(dlo) == 5 and arity_cap(org) == 9


def test_zero_budget_is_inconclusive(dlo):
    lt, le = R(dlo, "Lt", "x1<x2", 2), R(dlo, "Le", "x1<x2 | x1=x2", 2)
    d = decide(Problem(dlo, le, (lt,), "pp"), DeciderConfig(node_budget=0))
    assert d.verdict == INCONCLUSIVE and "limit" in d.diagnostics


def test_constraint_cap_is_inconclusive(dlo):
    lt, le = R(dlo, "Lt", "x1<x2", 2), R(dlo, "Le", "x1<x2 | x1=x2", 2)
    d = decide(Problem(dlo, le, (lt,), "pp"), DeciderConfig(max_constraints=10))
    assert d.verdict == INCONCLUSIVE


def test_unstaged_agrees(dlo):
    lt = R(dlo, "Lt", "x1<x2", 2)
    neq = R(dlo, "Neq", "!(x1=x2)", 2)
    for target in (neq, R(dlo, "Le", "x1<x2 | x1=x2", 2)):
        p = Problem(dlo, target, (lt,), "pp")
        assert decide(p).verdict == decide(p, DeciderConfig(staged=False)).verdict


@pytest.mark.parametrize("mode,expected", [("pp", NOT_DEFINABLE), ("ep", NOT_DEFINABLE), ("ex", DEFINABLE)])
def test_org_non_edge(org, mode, expected):
    # x1,x2 distinct and not adjacent, from the edge relation
    e = R(org, "E", "edge(x1,x2)", 2)
    n = R(org, "N", "!edge(x1,x2) & !(x1=x2)", 2)
    assert decide(Problem(org, n, (e,), mode)).verdict == expected


def test_witness_matches_problem(dlo):
    lt, le = R(dlo, "Lt", "x1<x2", 2), R(dlo, "Le", "x1<x2 | x1=x2", 2)
    d = decide(Problem(dlo, le, (lt,), "pp"))
    assert d.verdict == NOT_DEFINABLE
    assert set(d.search_problem.constants) <= set(le.type_set)


def test_identity_without_relations(dlo):
    assert check_identity(dlo, ()).verdict == SATISFIED


def test_identity_with_order(dlo):
    res = check_identity(dlo, (R(dlo, "Lt", "x1<x2", 2),))
    assert res.verdict == UNSATISFIED and res.witness is None


def _independent_siggers_order():
    """Search 4-ary canonical operations on (Q;<) preserving < with s(a,b,c,c) = s(b,c,a,b).

    Works on sign patterns: a value is assigned to each 4-tuple of 2-type
    signs, glued through the identity and the reversal symmetry with a
    parity union-find, then checked against all 13^4 choices of 3-types.
    This is a necessary condition, so ``None`` rules the identity out.
    """
    signs = "<=>"
    flip = {"<": ">", ">": "<", "=": "="}
    cells = list(itertools.product(signs, repeat=4))
    parent = {c: (c, 0) for c in cells}

    def find(c):
        p, f = parent[c]
        if p == c:
            return c, 0
        r, g = find(p)
        parent[c] = (r, f ^ g)
        return r, f ^ g

    odd = set()

    def union(a, b, f):
        (ra, fa), (rb, fb) = find(a), find(b)
        if ra == rb:
            if fa ^ fb != f:
                odd.add(ra)
            return
        parent[ra] = (rb, fa ^ fb ^ f)

    for c in cells:
        union(c, tuple(flip[x] for x in c), 1)
    for a, b, c in itertools.product(signs, repeat=3):
        union((a, b, c, c), (b, c, a, b), 0)
    odd = {find(r)[0] for r in odd}

    def sgn(x, y):
        return "<" if x < y else "=" if x == y else ">"

    triples = sorted({(sgn(x, y), sgn(y, z), sgn(x, z)) for x, y, z in itertools.product(range(3), repeat=3)})
    allowed = set(triples)
    checks = [[tuple(t[i] for t in ts) for i in range(3)] for ts in itertools.product(triples, repeat=4)]
    reps = sorted({find(c)[0] for c in cells})

    def value(assign, c):
        r, f = find(c)
        v = assign.get(r)
        return None if v is None else (flip[v] if f else v)

    def consistent(assign):
        for cs in checks:
            vs = tuple(value(assign, c) for c in cs)
            if None not in vs and vs not in allowed:
                return False
        return value(assign, ("<",) * 4) in (None, "<")

    def bt(i, assign):
        if i == len(reps):
            return dict(assign)
        for v in signs:
            if reps[i] in odd and v != "=":
                continue
            assign[reps[i]] = v
            if consistent(assign):
                found = bt(i + 1, assign)
                if found:
                    return found
            del assign[reps[i]]
        return None

    return bt(0, {})


def test_identity_with_order_agrees_with_independent_search():
    assert _independent_siggers_order() is None
