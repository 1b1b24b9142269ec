import json
import math
from pathlib import Path

import jsonschema
import numpy as np
import pytest
from scipy import stats

from icc_walk import construction as C
from icc_walk import rng as rng_mod
from icc_walk.errors import ConstructionError, SamplingStarvation, TruncationError, UsageError
from icc_walk.groups import FreeAbelian, Lamplighter, SymmetricSet, product_ball
from icc_walk.heavytail import EventParams
from icc_walk.measure import convolve_power, measure_entropy
from icc_walk.switching import is_super_switching

L = Lamplighter()
SCHEMAS = Path(C.__file__).with_name("schemas")


def test_build_certificate_depth8(state8):
    assert len(state8.steps) == 8
    s = state8.summary()
    assert s["certificates"] == 7 and s["certificates_valid"] == 7
    for st in state8.steps[state8.N:]:
        assert st.certificate.valid()
        assert st.g == L.element((st.certificate.P,), st.certificate.T)


def test_build_is_deterministic(state8):
    again = C.build("lamplighter", eps=0.05, n_max=8)
    assert [(s.a, s.g) for s in again.steps] == [(s.a, s.g) for s in state8.steps]


def test_degenerate_truncation():
    st = C.build("lamplighter", n_max=3, N=3)
    assert all(s.a == L.identity and s.g == L.identity for s in st.steps)
    mu = C.full_measure(st)
    assert set(mu.atoms) == {L.identity}


def test_padding_and_enumeration(state8):
    N = state8.N
    for st in state8.steps[:N]:
        assert st.a == L.identity and st.g == L.identity
    tail = [st.a for st in state8.steps[N:]]
    assert tail == [L.enumerate_elements(j) for j in range(1, len(tail) + 1)]
    assert C.step_atom(state8, N + 1, 1) == L.enumerate_elements(1)
    st = C.build("lamplighter", n_max=40, N=3)
    assert len({s.a for s in st.steps[3:]}) == 37


def test_bounds_dominate(state8):
    h = state8.h
    members = [h, L.invert(h)]
    for st in state8.steps:
        members += [st.a, L.invert(st.a), st.g, L.invert(st.g)]
        rt, rs = st.bounds_C
        for x in members:
            assert abs(x.t) <= rt and all(abs(p) <= rs for p in x.lamps)


def test_non_membership_mechanism(deep_state):
    """g_p lies outside (C_{p-1})^(8(p-1)+1) for every stored step p > N + 1."""
    steps = deep_state.steps
    for p in range(deep_state.N + 2, deep_state.n_max + 1, 97):
        rt = steps[p - 2].bounds_C[0]
        assert abs(steps[p - 1].g.t) > (8 * (p - 1) + 1) * rt


def test_certificates_recheck_deep(deep_state):
    assert all(c.valid() for c in deep_state.certificates()[:12])
    assert deep_state.summary()["certificates_valid"] == deep_state.n_max - deep_state.N


def test_exact_mode():
    st = C.build("lamplighter", n_max=3, mode="exact", N=1)
    records = [s.exact for s in st.steps if s.exact]
    assert len(records) == 2
    assert all(r["certificate_passes"] for r in records)
    elems = {L.identity, st.h, L.invert(st.h)}
    for s in st.steps:
        n = s.n
        if n > st.N:
            X = product_ball(SymmetricSet(L, elems), 2 * (n - 1) + 1)
            assert is_super_switching(s.g, X)
            assert s.certificate is not None and is_super_switching(
                L.element((s.certificate.P,), s.certificate.T), X)
        elems |= {s.a, L.invert(s.a), s.g, L.invert(s.g)}


def test_build_errors():
    with pytest.raises(UsageError):
        C.build("lamplighter", h=L.identity)
    with pytest.raises(UsageError):
        C.build("z", mode="certificate")
    with pytest.raises(UsageError):
        C.build("lamplighter", eps=0.2)
    st = C.build("z", mode="control", n_max=6)
    assert all(s.g == FreeAbelian(1).identity for s in st.steps)


def test_step_tables(state8):
    for n in range(1, 9):
        assert sum(C.step_weight(state8, n, j) for j in range(1, 5)) == pytest.approx(1.0, abs=1e-15)
        assert C.step_atom(state8, n, 3) == L.invert(C.step_atom(state8, n, 4))
        assert C.step_atom(state8, n, 1) == L.invert(C.step_atom(state8, n, 2))
        if n < 8:
            assert C.step_weight(state8, n, 1) / C.step_weight(state8, n + 1, 1) == 2
    assert C.step_weight(state8, 5, 3) == 0.49921875
    assert C.step_atom(state8, 1, 2) == L.identity
    with pytest.raises(TruncationError):
        C.step_atom(state8, 9, 1)
    with pytest.raises(TruncationError):
        C.step_weight(state8, 9, 1)
    mu5 = C.step_measure(state8, 5)
    assert mu5.is_symmetric() and mu5.total == pytest.approx(1.0)


def test_full_measure(state8, dist):
    H = dist.entropy(1e-6)
    for depth in range(1, 9):
        st = state8.truncate(depth)
        mu = C.full_measure(st)
        assert abs(mu.total + mu.lost - 1) <= 1e-12
        assert mu.lost == pytest.approx(dist.survival(depth + 1))
        assert mu.is_symmetric()
        ent = measure_entropy(mu)
        assert math.isfinite(ent) and ent <= H + math.log(4)
        for j in range(1, depth - st.N + 1):
            x = L.enumerate_elements(j)
            assert mu[x] > 0 and mu[L.invert(x)] > 0
    ren = C.full_measure(state8, renormalize=True)
    assert ren.renormalized and ren.total == pytest.approx(1.0)


def test_sample_omega_joint_law(state8, dist):
    S, W = C.sample_omega_batch(state8, 100_000, 1, rng_mod.stream(3, 4), truncated=False)
    s1, w1 = S[:, 0], W[:, 0]
    obs, exp = [], []
    for s in range(1, 5):
        for w in range(1, 5):
            obs.append(np.sum((s1 == s) & (w1 == w)))
            exp.append(dist.pmf(s) * C._nu(0.05, s, w) * s1.size)
    obs.append(np.sum(s1 >= 5))
    exp.append(dist.survival(5) * s1.size)
    _, pval = stats.chisquare(obs, exp)
    assert pval > 1e-4


def test_sample_omega_fields(state8, dist):
    a = C.sample_omega(state8, 10, 5)
    b = C.sample_omega(state8, 10, 5)
    assert a == b
    assert max(a.s) <= state8.n_max
    lp = sum(dist.log_pmf(s) + math.log(C._nu(state8.eps, s, w)) for s, w in zip(a.s, a.w))
    assert a.log_prob == pytest.approx(lp, rel=1e-12)
    assert a.conditioning == pytest.approx(10 * math.log(dist.truncated_mass(8)))
    assert a.records == tuple(C.record_indices(a.s, state8.N))


def test_evaluate_word(state8):
    s = C.OmegaSample(s=(1, 1, 1), w=(3, 1, 4), log_prob=0.0)
    assert C.evaluate_word(state8, s) == L.identity
    rng = np.random.default_rng(0)
    for _ in range(200):
        m = int(rng.integers(1, 7))
        s = tuple(int(v) for v in rng.integers(1, 9, m))
        w = tuple(int(v) for v in rng.integers(1, 5, m))
        direct = L.product(C.step_atom(state8, n, j) for n, j in zip(s, w))
        assert C.evaluate_word(state8, (s, w)) == direct
    assert C.evaluate_word(state8, ((5,), (2,))) == C.step_atom(state8, 5, 2)
    with pytest.raises(TruncationError):
        C.evaluate_word(state8, ((9,), (1,)))


def test_record_indices():
    assert C.record_indices([1] * 6, 5) == []
    assert C.record_indices([1, 7, 6, 9], 5) == [2, 4]
    S = np.array([[1, 7, 6, 9], [6, 6, 2, 6], [1, 2, 3, 1]])
    mask = C.record_mask(S, 5)
    for row, m in zip(S, mask):
        assert list(np.nonzero(m)[0] + 1) == C.record_indices(row.tolist(), 5)


def test_last_record_is_max(dist):
    params = EventParams(0.05, 2, 50, 30)
    S = dist.sample_array(rng_mod.stream(1, 2), (20_000, 30))
    inE = C.e_membership(S, params.K, params.N)
    for row in S[inE][:500]:
        rec = C.record_indices(row.tolist(), params.N)
        assert row[rec[-1] - 1] == row.max()


def test_in_omega_eps(dist):
    params = EventParams(0.05, 1, 1, 3)
    good = C.OmegaSample(s=(1, 5, 9), w=(1, 3, 3), log_prob=0.0)
    assert C.in_omega_eps(good, params)
    bad = C.OmegaSample(s=(1, 5, 9), w=(1, 3, 1), log_prob=0.0)
    assert not C.in_omega_eps(bad, params)
    not_e = C.OmegaSample(s=(1, 5, 5), w=(3, 3, 3), log_prob=0.0)
    assert not C.in_omega_eps(not_e, params)


def test_claim_small(deep_state):
    res = C.verify_claim(deep_state, 64, 300, seed=3)
    assert res.violations == 0 and res.cross_collisions == 0
    same = C.verify_claim(deep_state, 64, 100, seed=4, same_pairs=True)
    assert same.violations == 0
    inv = C.verify_claim(deep_state, 64, 100, seed=4, same_pairs=True, h=L.identity)
    assert inv.violations == 100


def test_claim_preconditions(state8):
    with pytest.raises(SamplingStarvation):
        C.verify_claim(state8, 64, 10, seed=0)
    st = C.build("lamplighter", n_max=20, N=5)
    with pytest.raises(UsageError):
        C.verify_claim(st, 5, 10, seed=0)


def test_event_bound_range():
    params = EventParams(0.05, 1, 1, 8)
    b = C.event_tv_bound(params, 5000, seed=1)
    assert -2 <= b.low <= b.estimate <= b.high <= 2
    assert C.event_tv_bound(params, 5000, seed=1).estimate == b.estimate


def test_pushforward_m1(state4):
    push = C.pushforward_exact(state4, 1)
    mu = C.full_measure(state4)
    assert set(push.atoms) == set(mu.atoms)
    for x in mu.atoms:
        assert push[x] == pytest.approx(mu[x], abs=1e-15)


def test_state_json_round_trip(state8, tmp_path):
    path = tmp_path / "state.json"
    C.save_state(state8, path)
    obj = json.loads(path.read_text())
    jsonschema.validate(obj, json.loads((SCHEMAS / "state.schema.json").read_text()))
    back = C.load_state(path)
    assert [(s.a, s.g, s.bounds_C) for s in back.steps] == [(s.a, s.g, s.bounds_C) for s in state8.steps]
    obj["steps"][4]["g"]["t"] = "12345"
    path.write_text(json.dumps(obj))
    with pytest.raises(ConstructionError):
        C.load_state(path)


def test_state_json_big_and_compact(tmp_path):
    st = C.build("lamplighter", n_max=600)
    obj = C.state_to_json(st)
    assert obj["steps"] is None
    full = C.state_to_json(st, full=True)
    last = full["steps"][-1]
    assert isinstance(last["g"]["t"], str) and int(last["g"]["t"]) == st.steps[-1].g.t
    path = tmp_path / "deep.json"
    C.save_state(st, path)
    assert C.load_state(path).steps[-1].g == st.steps[-1].g
