import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ALL_GROUPS, random_element
from icc_walk.errors import BudgetExceeded, UsageError
from icc_walk.groups import (FreeAbelian, Heisenberg, LampElement, Lamplighter, SymmetricSet,
                             conjugate_probe, group_from_descriptor, product_ball)

L = Lamplighter()


def test_lamplighter_law_by_hand():
    x = L.element((0,), 1)
    assert L.compose(x, x) == L.element((0, 1), 2)
    assert L.invert(x) == L.element((-1,), -1)
    assert L.invert(L.identity) == L.identity


def test_identity_and_inverse_cases():
    z = FreeAbelian(1)
    assert z.compose(z.element(3), z.element(-3)) == z.identity
    h = Heisenberg()
    assert h.invert(h.element(1, 0, 0)) == h.element(-1, 0, 0)
    for g in ALL_GROUPS:
        x = random_element(g, np.random.default_rng(0))
        assert g.compose(x, g.identity) == x


@pytest.mark.parametrize("group", ALL_GROUPS, ids=repr)
def test_group_axioms_random_triples(group):
    rng = np.random.default_rng(12345)
    comp, inv, e = group.compose, group.invert, group.identity
    for _ in range(100_000):
        x, y, z = (random_element(group, rng) for _ in range(3))
        assert comp(comp(x, y), z) == comp(x, comp(y, z))
        assert comp(x, inv(x)) == e
        assert comp(e, x) == x


@given(st.lists(st.integers(-10**30, 10**30), max_size=6), st.integers(-10**30, 10**30),
       st.lists(st.integers(-10**30, 10**30), max_size=6), st.integers(-10**30, 10**30))
@settings(max_examples=300, deadline=None)
def test_lamplighter_big_integers(l1, t1, l2, t2):
    x, y = L.element(l1, t1), L.element(l2, t2)
    xy = L.compose(x, y)
    assert list(xy.lamps) == sorted(set(xy.lamps))
    assert L.compose(L.invert(x), xy) == y
    assert L.from_json(L.to_json(xy)) == xy


@pytest.mark.parametrize("group", ALL_GROUPS, ids=repr)
def test_json_round_trip(group):
    rng = np.random.default_rng(3)
    for _ in range(200):
        x = random_element(group, rng, 10**6)
        assert group.from_json(group.to_json(x)) == x
    assert group_from_descriptor(group.descriptor()) == group


def test_json_big_ints_are_strings():
    x = L.element((2**60,), -(2**70))
    obj = L.to_json(x)
    assert obj["lamps"] == [str(2**60)] and obj["t"] == str(-(2**70))
    assert L.from_json(obj) == x
    with pytest.raises(UsageError):
        L.from_json({"lamps": [3, 1], "t": 0})


def test_mixed_operands_rejected():
    with pytest.raises(UsageError):
        L.compose(L.identity, FreeAbelian(1).element(1))


def test_icc_flags():
    assert Lamplighter.icc and not FreeAbelian(2).icc and not Heisenberg().icc
    assert all(g.amenable for g in ALL_GROUPS)


@pytest.mark.parametrize("group", ALL_GROUPS, ids=repr)
def test_enumeration_injective_prefix(group):
    assert group.enumerate_elements(1) == group.identity
    items = [group.enumerate_elements(i) for i in range(1, 10_001)]
    assert len(set(items)) == len(items)
    assert [group.enumerate_elements(i) for i in range(1, 50)] == items[:49]


def _bfs_ball(group, radius):
    gens = group.generators()
    ball = {group.identity}
    frontier = [group.identity]
    for _ in range(radius):
        nxt = []
        for x in frontier:
            for s in gens:
                y = group.compose(x, s)
                if y not in ball:
                    ball.add(y)
                    nxt.append(y)
        frontier = nxt
    return ball


def test_enumeration_covers_word_ball():
    ball = _bfs_ball(L, 3)
    idx = [L.index_of(x, 10**5) for x in ball]
    assert None not in idx
    assert sorted(idx) == list(range(1, len(ball) + 1))


def test_product_ball_examples():
    assert product_ball(SymmetricSet(L, [L.identity]), 5).elements == {L.identity}
    z = FreeAbelian(1)
    S = SymmetricSet(z, [z.element(v) for v in (-1, 0, 1)])
    assert product_ball(S, 3).elements == {z.element(v) for v in range(-3, 4)}
    gens = SymmetricSet(L, L.generators())
    words = _bfs_ball(L, 4)
    assert product_ball(gens, 4).elements == words


def test_product_ball_nested_and_symmetric():
    S = SymmetricSet(L, [L.element((0,), 0), L.element((), 2), L.element((), -2)])
    prev = None
    for k in range(5):
        b = product_ball(S, k)
        SymmetricSet(L, b)  # raises if not symmetric
        if prev is not None:
            assert prev <= b
        prev = b


def test_product_ball_budget():
    with pytest.raises(BudgetExceeded):
        product_ball(SymmetricSet(L, L.generators()), 20, budget=1000)


def test_symmetric_set_validation_and_bounds():
    with pytest.raises(UsageError):
        SymmetricSet(L, [L.element((), 1)])
    S = SymmetricSet(L, [L.element((3,), 2)], close=True)
    rt, rs = S.bounds
    for x in S:
        assert abs(x.t) <= rt and all(abs(p) <= rs for p in x.lamps)
    assert (rt, rs) == (2, 3)


def test_conjugate_probe():
    assert conjugate_probe(L, L.identity, 50) == {L.identity}
    h = Heisenberg()
    assert conjugate_probe(h, h.element(0, 0, 1), 200) == {h.element(0, 0, 1)}
    assert len(conjugate_probe(L, L.element((0,), 0), 100)) >= 10
    sizes = [len(conjugate_probe(L, L.element((), 1), n)) for n in (10, 100, 1000)]
    assert sizes[0] < sizes[1] < sizes[2]
