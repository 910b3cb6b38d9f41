from hypothesis import given, settings
from hypothesis import strategies as st

from ppdef.age import enumerate_types, subtype
from ppdef.pointed import (constant_self_type, forget_constants, pointed_count, pointed_space,
                           pointed_subtype)


def test_pointed_space_sizes(dlo):
    point = enumerate_types(dlo, 1)[0]
    # one free point relative to one constant: below, equal, above
    assert len(pointed_space(dlo, point, 1)) == 3
    lt = next(t for t in enumerate_types(dlo, 2) if t.holds("less", (0, 1)))
    assert len(pointed_space(dlo, lt, 1)) == 5
    assert pointed_count(dlo, lt, 2, 10**6) == len(pointed_space(dlo, lt, 2))
    assert pointed_count(dlo, lt, 3, 10) is None


def test_constant_self_type(dlo):
    for c in enumerate_types(dlo, 2):
        p = constant_self_type(c)
        assert p in pointed_space(dlo, c, 2)
        assert forget_constants(p) == c


@settings(max_examples=30, deadline=None)
@given(st.data())
def test_subtype_commutes_with_forgetting(data):
    from ppdef.age import builtin
    base = builtin(data.draw(st.sampled_from(["dense_linear_order", "ordered_random_graph"])))
    c = data.draw(st.sampled_from(enumerate_types(base, 2)))
    p = data.draw(st.sampled_from(pointed_space(base, c, 2)))
    idx = data.draw(st.lists(st.integers(0, 1), min_size=1, max_size=3))
    q = pointed_subtype(p, idx)
    assert q.base_type == c
    assert forget_constants(q) == subtype(forget_constants(p), idx)


def test_space_is_sorted_and_fibres_partition(org):
    c = enumerate_types(org, 1)[0]
    space = pointed_space(org, c, 2)
    assert space == sorted(space)
    by_free = {}
    for p in space:
        by_free.setdefault(forget_constants(p), []).append(p)
    assert set(by_free) == set(enumerate_types(org, 2))
    assert sum(map(len, by_free.values())) == len(space)
