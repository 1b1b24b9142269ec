import numpy as np
import pytest

from conftest import random_element
from icc_walk.errors import SearchFailure
from icc_walk.groups import FreeAbelian, Lamplighter, SymmetricSet, product_ball
from icc_walk.switching import (SwitchingCertificate, certificate_element, find_super_switching_exact,
                                is_super_switching, is_switching, pick_super_switching_lamplighter,
                                sandwich_check)

L = Lamplighter()
Z = FreeAbelian(1)
E = SymmetricSet(L, [L.identity])
X0 = SymmetricSet(L, [L.identity, L.element((0,), 0)])


def test_trivial_set():
    rng = np.random.default_rng(0)
    for _ in range(20):
        g = random_element(L, rng)
        assert is_switching(g, E) and is_super_switching(g, E) and sandwich_check(g, E)


def test_abelian_never_switches():
    X = SymmetricSet(Z, [Z.element(v) for v in (-1, 0, 1)])
    for g in (1, 5, -7):
        assert not is_switching(Z.element(g), X)
        assert not is_super_switching(Z.element(g), X)


def test_hand_examples():
    g = L.element((), 1)
    assert is_switching(g, X0)
    assert is_super_switching(g, X0)
    g2 = L.element((5,), 3)
    assert is_super_switching(g2, X0)
    assert sandwich_check(g2, X0)


def _random_symmetric(rng, size):
    return SymmetricSet(L, [random_element(L, rng, 3) for _ in range(size)] + [L.identity], close=True)


def test_properties_on_random_sets():
    rng = np.random.default_rng(7)
    hits = 0
    for _ in range(300):
        X = _random_symmetric(rng, int(rng.integers(1, 8)))
        g = random_element(L, rng, 12)
        gi = L.invert(g)
        assert is_switching(g, X) == is_switching(gi, X)
        assert is_super_switching(g, X) == is_super_switching(gi, X)
        if is_super_switching(g, X):
            hits += 1
            assert sandwich_check(g, X)
            sub = SymmetricSet(L, [x for x in X if x != L.identity][:2], close=True)
            assert is_super_switching(g, sub)
        if L.compose(g, g) == L.identity and is_switching(g, X):
            assert is_super_switching(g, X)
    assert hits > 30


def test_claim_on_larger_sets():
    X = product_ball(SymmetricSet(L, L.generators()), 4)
    assert len(X) <= 200
    g, _ = pick_super_switching_lamplighter(4, X.bounds)
    assert is_super_switching(g, X) and sandwich_check(g, X)


def test_involutions():
    for p in range(-3, 4):
        g = L.element((p, p + 5), 0)
        assert L.compose(g, g) == L.identity
        X = SymmetricSet(L, [L.identity, L.element((), 1), L.element((), -1)])
        if is_switching(g, X):
            assert is_super_switching(g, X)


def test_exact_search():
    assert find_super_switching_exact(E, E) == L.enumerate_elements(2)
    X = SymmetricSet(L, L.generators() + [L.identity])
    excl = product_ball(X, 3)
    g = find_super_switching_exact(X, excl)
    assert is_super_switching(g, X) and g not in excl
    Xz = SymmetricSet(Z, [Z.element(v) for v in (-1, 0, 1)])
    with pytest.raises(SearchFailure):
        find_super_switching_exact(Xz, SymmetricSet(Z, [Z.identity]), budget=500)


def test_certificate_example():
    g, cert = pick_super_switching_lamplighter(1, (1, 1))
    assert (cert.T, cert.P, cert.rho) == (20, 7, 6)
    assert g == L.element((7,), 20)
    assert cert.valid() and all(ok for _, ok in cert.checks)
    assert SwitchingCertificate.from_json(cert.to_json()) == cert
    assert certificate_element(cert) == g


@pytest.mark.parametrize("n", range(1, 4))
def test_certificate_matches_exact_checker(n):
    C = SymmetricSet(L, L.generators() + [L.identity, L.element((1,), 0)], close=True)
    X = product_ball(C, 2 * n + 1)
    g, cert = pick_super_switching_lamplighter(n, C.bounds)
    assert is_super_switching(g, X)
    excl = product_ball(C, 8 * n + 1) if n == 1 else None
    if excl is not None:
        assert g not in excl
    # non-membership from the bound alone: every element of (C)^(8n+1) has |t| <= (8n+1) R_t
    assert abs(g.t) > (8 * n + 1) * C.bounds[0]


def test_certificate_bounds_monotone_chain():
    bounds = (1, 1)
    for n in range(1, 13):
        g, cert = pick_super_switching_lamplighter(n, bounds)
        assert cert.valid()
        bounds = (max(bounds[0], g.t), max(bounds[1], g.t - g.lamps[0], g.lamps[0]))
