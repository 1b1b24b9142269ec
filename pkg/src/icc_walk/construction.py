"""Recursive construction of a symmetric, fully supported step distribution.

Given h != e, the state fixes

* a_1 = ... = a_N = e and a_{N+j} = the j-th enumerated element,
* g_1 = ... = g_N = e and, for n >= N, g_{n+1} super-switching for
  (C_n)^(2n+1) and outside (C_n)^(8n+1),

where A_n = {a_n^+-1, g_n^+-1}, B_n = A_1 u ... u A_n and C_n = B_n u {h^+-1}.
The step law mu_n puts eps 2^-n / 2 on each of a_n^+-1 and
(1 - eps 2^-n) / 2 on each of g_n^+-1, and mu = sum_n p(n) mu_n.

For the words r(s, w) = f_{s_1}(w_1) ... f_{s_m}(w_m), with f_n listing
a_n, a_n^-1, g_n, g_n^-1, the set Omega_eps of pairs (s, w) with s in E and
w in {3, 4} at every record index of s is mapped by r injectively away from
its h-translate.  ``verify_claim`` tests this on sampled pairs.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import math
import sys
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import rng as rng_mod
from .errors import (BudgetExceeded, ConstructionError, SamplingStarvation, SearchFailure,
                     TruncationError, UsageError)
from .groups import Group, LampElement, Lamplighter, SymmetricSet, group_from_descriptor, product_ball
from .heavytail import HeavyTailDist, EventParams, e_membership, wilson_interval
from .measure import SparseMeasure
from .switching import (SwitchingCertificate, find_super_switching_exact, is_super_switching,
                        pick_super_switching_lamplighter)

STATE_SCHEMA = "icc-walk/state"
STATE_VERSION = 1
MODES = ("certificate", "exact", "control")
# states deeper than this serialize their parameters only and rebuild on load
JSON_STEP_LIMIT = 512

_DIST: HeavyTailDist | None = None


def default_dist() -> HeavyTailDist:
    global _DIST
    if _DIST is None:
        _DIST = HeavyTailDist()
    return _DIST


@dataclass
class Step:
    n: int
    a: object
    g: object
    oracle: str
    certificate: SwitchingCertificate | None = None
    exact: dict | None = None
    bounds_B: tuple = (0, 0)
    bounds_C: tuple = (0, 0)


@dataclass
class ConstructionState:
    group: Group
    h: object
    eps: float
    N: int
    K: int
    n_max: int
    mode: str
    steps: list = field(default_factory=list)
    build_seconds: float = 0.0

    def step(self, n: int) -> Step:
        if not 1 <= n <= self.n_max:
            raise TruncationError(f"step {n} outside 1..{self.n_max}")
        return self.steps[n - 1]

    def truncate(self, n: int) -> "ConstructionState":
        """The same construction stopped at depth n."""
        if not 1 <= n <= self.n_max:
            raise UsageError(f"depth {n} outside 1..{self.n_max}")
        return replace(self, n_max=n, steps=self.steps[:n])

    def certificates(self) -> list[SwitchingCertificate]:
        return [s.certificate for s in self.steps if s.certificate is not None]

    def summary(self) -> dict:
        certs = self.certificates()
        exact = [s.exact for s in self.steps if s.exact]
        return {
            "mode": self.mode,
            "n_max": self.n_max,
            "N": self.N,
            "K": self.K,
            "certificates": len(certs),
            "certificates_valid": sum(c.valid() for c in certs),
            "exact_checks": len(exact),
            "exact_disagreements": sum(not e.get("certificate_passes", True) for e in exact),
            "oracles": sorted({s.oracle for s in self.steps}),
        }


def _set_bounds(group: Group, elements) -> tuple:
    if isinstance(group, Lamplighter):
        return group.bounds(elements)
    r = max((abs(c) for x in elements for c in x), default=0)
    return (r, r)


def _merge_bounds(a: tuple, b: tuple) -> tuple:
    return (max(a[0], b[0]), max(a[1], b[1]))


def _exact_step(n, C: SymmetricSet, budget: int, cert_g):
    """Exact search for step n+1 plus the cross-check of the certificate pick."""
    X = product_ball(C, 2 * n + 1, budget)
    record = {"X_size": len(X), "exclude_size": None}
    if cert_g is not None:
        record["certificate_passes"] = is_super_switching(cert_g, X)
    try:
        exclude = product_ball(C, 8 * n + 1, budget)
    except BudgetExceeded:
        record["search"] = "exclude ball over budget"
        return None, record
    record["exclude_size"] = len(exclude)
    if cert_g is not None:
        record["certificate_passes"] = record["certificate_passes"] and cert_g not in exclude
    g = find_super_switching_exact(X, exclude, budget=max(budget, len(exclude) + 1000))
    record["search"] = "found"
    return g, record


def build(group: Group | str, h=None, eps: float = 0.05, n_max: int = 8,
          mode: str = "certificate", N: int = 1, K: int = 1,
          budget: int = 2_000_000) -> ConstructionState:
    """Run the recursion up to depth ``n_max``.

    ``certificate`` picks each g from coordinate bounds (lamplighter only).
    ``exact`` searches the enumeration against explicit product balls and
    falls back to a certificate once a ball exceeds ``budget``; every
    certificate pick at an enumerable step is checked against the ball.
    ``control`` skips the switching obligation and sets every g_n = e.
    """
    t0 = time.perf_counter()
    if isinstance(group, (str, dict)):
        group = group_from_descriptor(group)
    if mode not in MODES:
        raise UsageError(f"mode must be one of {MODES}")
    if not 0 < eps < 0.125:
        raise UsageError("eps must lie in (0, 1/8)")
    if n_max < 1 or N < 1 or K < 1:
        raise UsageError("n_max, N and K must be >= 1")
    if h is None:
        h = group.element((0,), 0) if isinstance(group, Lamplighter) else group.generators()[0]
    group.check(h)
    e = group.identity
    if h == e:
        raise UsageError("h must differ from the identity")
    if mode != "control" and not group.icc:
        raise UsageError(f"{group!r} is not ICC; use control mode")
    if mode == "certificate" and not isinstance(group, Lamplighter):
        raise UsageError("certificate mode needs the lamplighter group")

    inv = group.invert
    bounds_h = _set_bounds(group, [h, inv(h)])
    bounds_B = (0, 0)
    C_elems = {e, h, inv(h)} if mode == "exact" else None
    steps: list[Step] = []
    for n in range(1, n_max + 1):
        a = e if n <= N else group.enumerate_elements(n - N)
        cert = None
        exact = None
        if n <= N or mode == "control":
            g, oracle = e, "padding" if n <= N else "control"
        else:
            prev = n - 1
            bounds_C_prev = _merge_bounds(steps[-1].bounds_B, bounds_h)
            cert_g = None
            if isinstance(group, Lamplighter):
                cert_g, cert = pick_super_switching_lamplighter(prev, bounds_C_prev)
                if not cert.valid():
                    raise ConstructionError(n, f"certificate inequalities fail: {cert.recheck()}")
            if mode == "certificate":
                g, oracle = cert_g, "certificate"
            else:
                try:
                    g, exact = _exact_step(prev, SymmetricSet(group, C_elems), budget, cert_g)
                except BudgetExceeded as exc:
                    g, exact = None, {"search": f"ball over budget: {exc}"}
                except SearchFailure as exc:
                    raise ConstructionError(n, str(exc)) from None
                if exact.get("certificate_passes") is False:
                    raise ConstructionError(n, "certificate pick fails the exact checker")
                if g is None:
                    if cert_g is None:
                        raise ConstructionError(n, "exact search infeasible and no certificate available")
                    g, oracle = cert_g, "certificate"
                else:
                    oracle = "exact"
        new = [a, inv(a), g, inv(g)]
        bounds_B = _merge_bounds(bounds_B, _set_bounds(group, new))
        if C_elems is not None:
            C_elems.update(new)
        steps.append(Step(n=n, a=a, g=g, oracle=oracle, certificate=cert, exact=exact,
                          bounds_B=bounds_B, bounds_C=_merge_bounds(bounds_B, bounds_h)))
    return ConstructionState(group=group, h=h, eps=eps, N=N, K=K, n_max=n_max, mode=mode,
                             steps=steps, build_seconds=time.perf_counter() - t0)


# -- step laws -------------------------------------------------------------

def step_atom(state: ConstructionState, n: int, j: int):
    """f_n(j): a_n, a_n^-1, g_n, g_n^-1 for j = 1..4."""
    st = state.step(n)
    if j == 1:
        return st.a
    if j == 2:
        return state.group.invert(st.a)
    if j == 3:
        return st.g
    if j == 4:
        return state.group.invert(st.g)
    raise UsageError("j must be in 1..4")


def step_weight(state: ConstructionState, n: int, j: int) -> float:
    """nu_n(j): eps 2^-n / 2 for j = 1, 2 and (1 - eps 2^-n) / 2 for j = 3, 4."""
    state.step(n)
    return _nu(state.eps, n, j)


def _nu(eps: float, n: int, j: int) -> float:
    small = math.ldexp(eps, -n)
    if j in (1, 2):
        return small / 2
    if j in (3, 4):
        return (1.0 - small) / 2
    raise UsageError("j must be in 1..4")


def _log_nu(eps, S, W):
    """Vectorised log nu_s(w)."""
    S = np.asarray(S, dtype=np.float64)
    W = np.asarray(W)
    log_small = math.log(eps) - S * math.log(2.0)
    small = np.exp(log_small)
    return np.where(W <= 2, log_small - math.log(2.0), np.log1p(-small) - math.log(2.0))


def step_measure(state: ConstructionState, n: int) -> SparseMeasure:
    acc: dict = {}
    for j in range(1, 5):
        x = step_atom(state, n, j)
        acc[x] = acc.get(x, 0.0) + step_weight(state, n, j)
    return SparseMeasure(state.group, acc)


def full_measure(state: ConstructionState, renormalize: bool = False,
                 dist: HeavyTailDist | None = None) -> SparseMeasure:
    """sum_{n <= n_max} p(n) mu_n; the missing tail mass is carried as ``lost``."""
    dist = dist or default_dist()
    acc: dict = {}
    for n in range(1, state.n_max + 1):
        pn = dist.pmf(n)
        for j in range(1, 5):
            x = step_atom(state, n, j)
            acc[x] = acc.get(x, 0.0) + pn * _nu(state.eps, n, j)
    mu = SparseMeasure(state.group, acc, lost=dist.survival(state.n_max + 1))
    return mu.renormalize() if renormalize else mu


# -- the probability space Omega ------------------------------------------

@dataclass
class OmegaSample:
    s: tuple
    w: tuple
    log_prob: float
    conditioning: float = 0.0  # log Pr[all s_i <= n_max] when drawn truncated
    records: tuple | None = None

    @property
    def m(self) -> int:
        return len(self.s)


def draw_w(eps: float, S: np.ndarray, g: np.random.Generator) -> np.ndarray:
    """w_i ~ nu_{s_i}, one uniform per coordinate."""
    S = np.asarray(S, dtype=np.float64)
    small = eps * np.exp2(-S)
    u = g.random(S.shape)
    a = small / 2
    W = 1 + (u >= a).astype(np.int8) + (u >= small) + (u >= small + (1 - small) / 2)
    return W.astype(np.int8)


def sample_omega_batch(state: ConstructionState, rows: int, m: int, rng,
                       truncated: bool = True, dist: HeavyTailDist | None = None):
    """``rows`` draws of (s, w) as arrays of shape (rows, m)."""
    dist = dist or default_dist()
    g = rng_mod.as_generator(rng, rng_mod.OMEGA)
    S = dist.sample_array(g, (rows, m), state.n_max if truncated else None)
    W = draw_w(state.eps, S, g)
    return S, W


def sample_omega(state: ConstructionState, m: int, rng, truncated: bool = True,
                 dist: HeavyTailDist | None = None) -> OmegaSample:
    if m < 1:
        raise UsageError("m must be >= 1")
    dist = dist or default_dist()
    S, W = sample_omega_batch(state, 1, m, rng, truncated, dist)
    return make_sample(state, S[0], W[0], truncated, dist)


def make_sample(state, s, w, truncated=False, dist=None) -> OmegaSample:
    dist = dist or default_dist()
    s = tuple(int(x) for x in s)
    w = tuple(int(x) for x in w)
    lp = float(np.sum(dist.log_pmf(np.array(s))) + np.sum(_log_nu(state.eps, s, w)))
    cond = len(s) * math.log(dist.truncated_mass(state.n_max)) if truncated else 0.0
    return OmegaSample(s=s, w=w, log_prob=lp, conditioning=cond,
                       records=tuple(record_indices(s, state.N)))


def record_indices(s, N) -> list[int]:
    """1-based record chain: first s_j > N, then each next j with s_j >= the last record."""
    out = []
    cur = None
    for j, x in enumerate(s, start=1):
        if cur is None:
            if x > N:
                out.append(j)
                cur = x
        elif x >= cur:
            out.append(j)
            cur = x
    return out


def record_mask(S: np.ndarray, N) -> np.ndarray:
    """Boolean (rows, m) mask of record indices."""
    S = np.asarray(S, dtype=np.float64)
    prev = np.zeros_like(S)
    if S.shape[1] > 1:
        prev[:, 1:] = np.maximum.accumulate(S, axis=1)[:, :-1]
    return (S > N) & (S >= prev)


def omega_mask(S: np.ndarray, W: np.ndarray, params: EventParams) -> np.ndarray:
    """Rows with s in E and w in {3, 4} at every record index."""
    inE = e_membership(S, params.K, params.N)
    bad = record_mask(S, params.N) & (np.asarray(W) <= 2)
    return inE & ~bad.any(axis=1)


def in_omega_eps(sample: OmegaSample, params: EventParams) -> bool:
    if sample.m != params.m:
        raise UsageError(f"sample length {sample.m} != m = {params.m}")
    S = np.array([sample.s], dtype=np.float64)
    W = np.array([sample.w])
    return bool(omega_mask(S, W, params)[0])


# -- words -----------------------------------------------------------------

def evaluate_word(state: ConstructionState, sample) -> object:
    """r(s, w) = f_{s_1}(w_1) ... f_{s_m}(w_m)."""
    s, w = (sample.s, sample.w) if isinstance(sample, OmegaSample) else sample
    return _evaluate(state, s, w)


def _evaluate(state, s, w):
    n_max = state.n_max
    if isinstance(state.group, Lamplighter):
        pos = 0
        lamps: set = set()
        for n, j in zip(s, w):
            n = int(n)
            if n > n_max:
                raise TruncationError(f"s_i = {n} exceeds n_max = {n_max}")
            st = state.steps[n - 1]
            x = st.a if j <= 2 else st.g
            if j in (1, 3):
                for l in x.lamps:
                    lamps ^= {pos + l}
                pos += x.t
            else:
                # x^-1 = (f - t, -t)
                pos -= x.t
                for l in x.lamps:
                    lamps ^= {pos + l}
        return LampElement(tuple(sorted(lamps)), pos)
    out = state.group.identity
    for n, j in zip(s, w):
        if int(n) > n_max:
            raise TruncationError(f"s_i = {int(n)} exceeds n_max = {n_max}")
        out = state.group.compose(out, step_atom(state, int(n), int(j)))
    return out


def word_digest(x) -> bytes:
    """16-byte digest of a canonical element, used to compare deep words cheaply."""
    hsh = hashlib.blake2b(digest_size=16)
    if isinstance(x, LampElement):
        for v in (x.t, len(x.lamps), *x.lamps):
            hsh.update(v.to_bytes((v.bit_length() + 8) // 8, "little", signed=True))
            hsh.update(b"|")
    else:
        hsh.update(repr(tuple(x)).encode())
    return hsh.digest()


# -- claim and event bound ---------------------------------------------------

@dataclass
class ClaimResult:
    m: int
    pairs: int
    violations: int
    cross_collisions: int
    accepted: int
    draws: int
    acceptance: float
    same_pairs: bool
    seconds: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def sample_omega_eps(state, m, count, seed, truncated=True, dist=None, batch=4096,
                     min_acceptance=1e-3, stream_id=rng_mod.CLAIM):
    """``count`` rejection samples of eta conditioned on Omega_eps."""
    dist = dist or default_dist()
    params = EventParams(state.eps, state.K, state.N, m)
    g = rng_mod.stream(seed, stream_id)
    keep_s, keep_w = [], []
    got = draws = 0
    while got < count:
        S, W = sample_omega_batch(state, batch, m, g, truncated, dist)
        ok = omega_mask(S, W, params)
        draws += batch
        got += int(ok.sum())
        keep_s.append(S[ok])
        keep_w.append(W[ok])
        if draws >= 20 * batch and got < min_acceptance * draws:
            raise SamplingStarvation(
                f"Omega_eps acceptance {got / draws:.2e} below {min_acceptance:g} after {draws} draws "
                f"(m={m}, n_max={state.n_max}, N={state.N}, K={state.K})")
    S = np.concatenate(keep_s)[:count].astype(np.int64)
    W = np.concatenate(keep_w)[:count]
    return S, W, draws, got


def verify_claim(state: ConstructionState, m: int, pairs: int, seed: int, *, h=None,
                 same_pairs: bool = False, dist: HeavyTailDist | None = None) -> ClaimResult:
    """Count equalities h r(alpha) = r(beta) over sampled alpha, beta in Omega_eps.

    ``violations`` compares the i-th alpha with the i-th beta;
    ``cross_collisions`` compares every alpha with every beta via hashing.
    """
    t0 = time.perf_counter()
    if m < max(state.K, state.N) + 1:
        raise UsageError(f"m must be >= max(K, N) + 1 = {max(state.K, state.N) + 1}")
    if pairs < 1:
        raise UsageError("pairs must be >= 1")
    h = state.h if h is None else h
    need = pairs if same_pairs else 2 * pairs
    S, W, draws, got = sample_omega_eps(state, m, need, seed, dist=dist)
    comp = state.group.compose
    offset = 0 if same_pairs else pairs

    def left(i):
        return comp(h, _evaluate(state, S[i], W[i]))

    def right(i):
        return _evaluate(state, S[offset + i], W[offset + i])

    # deep words are megabytes each; keep digests and confirm matches exactly
    lkeys = [word_digest(left(i)) for i in range(pairs)]
    rkeys = [word_digest(right(i)) for i in range(pairs)]
    violations = sum(1 for i in range(pairs) if lkeys[i] == rkeys[i] and left(i) == right(i))
    where = {}
    for i, k in enumerate(lkeys):
        where.setdefault(k, i)
    cross = 0
    for k in set(rkeys) & set(where):
        j = rkeys.index(k)
        cross += left(where[k]) == right(j)
    return ClaimResult(m=m, pairs=pairs, violations=violations, cross_collisions=cross,
                       accepted=got, draws=draws, acceptance=got / draws, same_pairs=same_pairs,
                       seconds=time.perf_counter() - t0)


@dataclass
class OmegaMass:
    params: EventParams
    hits: int
    samples: int
    p_hat: float
    ci: tuple
    truncated_at: int | None

    def to_dict(self) -> dict:
        return {"eps": self.params.eps, "K": self.params.K, "N": self.params.N, "m": self.params.m,
                "hits": self.hits, "samples": self.samples, "p_hat": self.p_hat,
                "ci": list(self.ci), "truncated_at": self.truncated_at}


def omega_mass(params: EventParams, samples: int, seed: int, n_max: int | None = None,
               dist: HeavyTailDist | None = None, chunk: int = 10_000,
               stream_id=rng_mod.EVENT) -> OmegaMass:
    """Monte Carlo eta(Omega_eps) with a z = 3 Wilson interval.

    Without ``n_max`` the heavy-tailed coordinates are drawn untruncated.
    """
    dist = dist or default_dist()
    g = rng_mod.stream(seed, stream_id)
    hits = done = 0
    while done < samples:
        rows = min(chunk, samples - done)
        S = dist.sample_array(g, (rows, params.m), n_max)
        W = draw_w(params.eps, S, g)
        hits += int(omega_mask(S, W, params).sum())
        done += rows
    return OmegaMass(params, hits, samples, hits / samples, wilson_interval(hits, samples), n_max)


@dataclass
class EventBound:
    mass: OmegaMass
    estimate: float
    low: float
    high: float

    @property
    def ci(self) -> float:
        return self.estimate - self.low

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "low": self.low, "high": self.high, "ci": self.ci,
                "omega": self.mass.to_dict()}


def event_tv_bound(params: EventParams, samples: int, seed: int, n_max: int | None = None,
                   dist: HeavyTailDist | None = None) -> EventBound:
    """4 eta(Omega_eps) - 2, a lower bound on ||h mu^m - mu^m|| when the claim holds."""
    om = omega_mass(params, samples, seed, n_max, dist)
    lo, hi = om.ci
    return EventBound(om, 4 * om.p_hat - 2, 4 * lo - 2, 4 * hi - 2)


# -- pushforward -------------------------------------------------------------

def pushforward_exact(state: ConstructionState, m: int, dist: HeavyTailDist | None = None) -> SparseMeasure:
    """r_* eta over the truncated Omega, by full enumeration."""
    dist = dist or default_dist()
    n_max = state.n_max
    if (4 * n_max) ** m > 5_000_000:
        raise UsageError("enumeration too large")
    letters = [(n, j, dist.pmf(n) * _nu(state.eps, n, j)) for n in range(1, n_max + 1) for j in range(1, 5)]
    acc: dict = {}
    for word in itertools.product(letters, repeat=m):
        s = [x[0] for x in word]
        w = [x[1] for x in word]
        weight = math.prod(x[2] for x in word)
        z = _evaluate(state, s, w)
        acc[z] = acc.get(z, 0.0) + weight
    kept = math.fsum(acc.values())
    return SparseMeasure(state.group, acc, lost=1.0 - kept)


def pushforward_sample(state: ConstructionState, m: int, samples: int, seed: int,
                       dist: HeavyTailDist | None = None) -> dict:
    """Empirical law of r under eta conditioned on all s_i <= n_max."""
    S, W = sample_omega_batch(state, samples, m, rng_mod.stream(seed, rng_mod.SAMPLE), True, dist)
    S = S.astype(np.int64)
    counts: dict = {}
    for i in range(samples):
        z = _evaluate(state, S[i], W[i])
        counts[z] = counts.get(z, 0) + 1
    return {z: c / samples for z, c in counts.items()}


def empirical_tv_envelope(exact: dict, samples: int, z: float = 3.0) -> float:
    """Upper envelope for ||empirical - exact|| at the given sample size.

    The mean is at most sum_g sqrt(p_g (1 - p_g) / n); one sample moves the
    distance by at most 2 / n, so fluctuations have sd at most 1 / sqrt(n).
    """
    mean = math.fsum(math.sqrt(p * (1 - p) / samples) for p in exact.values())
    return mean + z / math.sqrt(samples)


# -- JSON ---------------------------------------------------------------------

def _bounds_json(b):
    return [str(b[0]), str(b[1])]


def state_to_json(state: ConstructionState, full: bool | None = None) -> dict:
    grp = state.group
    full = state.n_max <= JSON_STEP_LIMIT if full is None else full
    out = {
        "schema": STATE_SCHEMA,
        "version": STATE_VERSION,
        "group": grp.descriptor(),
        "h": grp.to_json(state.h),
        "eps": state.eps,
        "N": state.N,
        "K": state.K,
        "n_max": state.n_max,
        "mode": state.mode,
        "summary": state.summary(),
        "steps": None,
    }
    if full:
        out["steps"] = [{
            "n": st.n,
            "a": grp.to_json(st.a),
            "g": grp.to_json(st.g),
            "oracle": st.oracle,
            "certificate": st.certificate.to_json() if st.certificate else None,
            "exact": st.exact,
            "bounds_B": _bounds_json(st.bounds_B),
            "bounds_C": _bounds_json(st.bounds_C),
        } for st in state.steps]
    return out


def state_from_json(obj: dict) -> ConstructionState:
    """Load a state; without stored steps it is rebuilt from its parameters.

    Stored steps are compared with a deterministic rebuild, so a tampered
    or stale file raises ``ConstructionError``.
    """
    if obj.get("schema") != STATE_SCHEMA or obj.get("version") != STATE_VERSION:
        raise UsageError("not a version 1 state file")
    group = group_from_descriptor(obj["group"])
    state = build(group, group.from_json(obj["h"]), float(obj["eps"]), int(obj["n_max"]),
                  obj["mode"], int(obj["N"]), int(obj["K"]))
    if obj.get("steps") is not None:
        for st, rec in zip(state.steps, obj["steps"], strict=True):
            stored_cert = rec["certificate"]
            same = (group.from_json(rec["a"]) == st.a and group.from_json(rec["g"]) == st.g
                    and tuple(int(v) for v in rec["bounds_C"]) == tuple(st.bounds_C))
            if stored_cert is not None:
                cert = SwitchingCertificate.from_json(stored_cert)
                same = same and cert.valid() and cert == st.certificate
            if not same:
                raise ConstructionError(st.n, "stored step disagrees with the rebuild")
    return state


def save_state(state: ConstructionState, path, full: bool | None = None):
    sys.set_int_max_str_digits(0)
    with open(path, "w") as fh:
        json.dump(state_to_json(state, full), fh, indent=1)


def load_state(path) -> ConstructionState:
    sys.set_int_max_str_digits(0)
    with open(path) as fh:
        return state_from_json(json.load(fh))
