"""The step-size law p(n) = c n^(-5/4) on {1, 2, ...} and its record statistics.

Tail sums of n^(-5/4) are enclosed rigorously.  Terms below ``_EM_START`` are
summed directly.  The rest uses Euler-Maclaurin truncated after the f' and
f''' terms: for x^(-5/4) every even derivative is positive, so the two
truncations bracket the true sum.

Sequences are checked against the record events:

* ``M_k = max(s_1..s_k)``
* ``next(k) = min{i > k : s_i >= M_k}``
* ``A_k``: ``M_k < k^2``
* ``B_k``: ``s_next(k) = M_k``
* ``E_{K,N,m}``: ``max(s_1..s_K) <= N``, and for every K <= k <= m the
  prefix maximum is at least k^2 and is attained once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as rng_mod
from .errors import CalibrationFailure, UsageError

ALPHA = 1.25
_EM_START = 1024
_REL_PAD = 1e-15


def _em_tail(n):
    """Euler-Maclaurin bracket (lo, hi) of sum_{m>=n} m^(-5/4); n >= 1, array ok."""
    x = np.asarray(n, dtype=np.float64)
    integral = 4.0 * x ** -0.25
    f = x ** -1.25
    f1 = -1.25 * x ** -2.25
    f3 = -1.25 * 2.25 * 3.25 * x ** -4.25
    hi = integral + f / 2.0 - f1 / 12.0
    lo = hi + f3 / 720.0
    return lo * (1 - _REL_PAD), hi * (1 + _REL_PAD)


def _suffix_table(n0: int) -> np.ndarray:
    """suffix[n] = sum_{m=n}^{n0-1} m^(-5/4) for 1 <= n < n0 (index 0 unused)."""
    out = np.zeros(n0 + 1)
    partials: list[float] = []
    for m in range(n0 - 1, 0, -1):
        partials.append(m ** -1.25)
        out[m] = math.fsum(partials)
    return out


_SUFFIX = _suffix_table(_EM_START)
_EM0_LO, _EM0_HI = (float(v) for v in _em_tail(_EM_START))


def zeta_tail(n: int) -> tuple[float, float]:
    """Enclosure of sum_{m >= n} m^(-5/4)."""
    if n < 1:
        raise UsageError("n must be >= 1")
    if n >= _EM_START:
        lo, hi = _em_tail(n)
        return float(lo), float(hi)
    s = _SUFFIX[n]
    return (s + _EM0_LO) * (1 - _REL_PAD), (s + _EM0_HI) * (1 + _REL_PAD)


def zeta_tail_mid(n) -> np.ndarray:
    """Vectorised midpoint of ``zeta_tail``."""
    n = np.asarray(n, dtype=np.float64)
    out = np.empty_like(n)
    small = n < _EM_START
    if np.any(small):
        idx = n[small].astype(np.int64)
        out[small] = _SUFFIX[idx] + 0.5 * (_EM0_LO + _EM0_HI)
    if np.any(~small):
        lo, hi = _em_tail(n[~small])
        out[~small] = 0.5 * (lo + hi)
    return out


class HeavyTailDist:
    """p(n) = c n^(-5/4) with 1/c = zeta(5/4).

    The survival function S(n) = Pr[s >= n] is cached for n <= cache_depth.
    Beyond that the Euler-Maclaurin tail is evaluated directly.
    """

    def __init__(self, cache_depth: int = 1 << 20):
        if cache_depth < 2:
            raise UsageError("cache_depth must be >= 2")
        z_lo, z_hi = zeta_tail(1)
        self.zeta_enclosure = (z_lo, z_hi)
        self.c = 2.0 / (z_lo + z_hi)
        self.c_enclosure = (1.0 / z_hi, 1.0 / z_lo)
        self.cache_depth = cache_depth
        self._surv = self._survival_block(1, cache_depth + 2)

    def _survival_block(self, start: int, stop: int) -> np.ndarray:
        n = np.arange(start, stop, dtype=np.float64)
        s = self.c * zeta_tail_mid(n)
        if start == 1:
            s[0] = 1.0
        return s

    def _ensure_cache(self, depth: int):
        if depth > self.cache_depth:
            self._surv = np.concatenate([self._surv, self._survival_block(self.cache_depth + 2, depth + 2)])
            self.cache_depth = depth

    # -- point evaluations --------------------------------------------
    def pmf(self, n: int) -> float:
        if n < 1:
            raise UsageError("p(n) is defined for n >= 1")
        return self.c * float(n) ** -ALPHA

    def log_pmf(self, n) -> np.ndarray | float:
        return math.log(self.c) - ALPHA * np.log(np.asarray(n, dtype=np.float64))

    def survival(self, n: int) -> float:
        """Point estimate of Pr[s >= n]."""
        if n < 1:
            return 1.0
        if n <= self.cache_depth + 1:
            return float(self._surv[n - 1])
        return float(self.c * zeta_tail_mid(float(n)))

    def tail_mass(self, n: int) -> tuple[float, float]:
        """Rigorous enclosure of Pr[s >= n]."""
        if n < 1:
            raise UsageError("n must be >= 1")
        if n == 1:
            return 1.0, 1.0
        t_lo, t_hi = zeta_tail(n)
        z_lo, z_hi = self.zeta_enclosure
        return t_lo / z_hi, min(1.0, t_hi / z_lo)

    # -- sampling -----------------------------------------------------
    def _invert(self, v: np.ndarray) -> np.ndarray:
        """Largest n with S(n) >= v, for v in (0, 1]."""
        v = np.asarray(v, dtype=np.float64)
        count = np.searchsorted(-self._surv, -v, side="right").astype(np.float64)
        deep = count >= self.cache_depth + 1
        if np.any(deep):
            count[deep] = self._invert_tail(v[deep])
        return count

    def _invert_tail(self, v: np.ndarray) -> np.ndarray:
        c = self.c
        x = (4.0 * c / v) ** 4
        for _ in range(60):
            xq = x ** -0.25
            g = c * (4.0 * xq + 0.5 * x ** -1.25 + (1.25 / 12.0) * x ** -2.25) - v
            dg = -c * (x ** -1.25 + 0.625 * x ** -2.25 + (1.25 * 2.25 / 12.0) * x ** -3.25)
            step = g / dg
            x = np.maximum(x - step, 0.5 * x)
            if np.all(np.abs(step) <= 1e-13 * x):
                break
        n = np.floor(x)
        exact = n < 2.0 ** 52
        if np.any(exact):
            ne = n[exact]
            ve = v[exact]
            # fix off-by-one from the continuous solve
            for _ in range(3):
                s_n = c * zeta_tail_mid(ne)
                ne = np.where(s_n < ve, ne - 1, ne)
                s_next = c * zeta_tail_mid(ne + 1)
                ne = np.where(s_next >= ve, ne + 1, ne)
            n[exact] = ne
        return np.maximum(n, float(self.cache_depth + 1))

    def sample(self, rng) -> int:
        """One exact inverse-CDF draw."""
        g = rng_mod.as_generator(rng, rng_mod.SAMPLE)
        v = 1.0 - g.random()
        return int(self._invert(np.array([v]))[0])

    def sample_array(self, rng, size, n_max: int | None = None) -> np.ndarray:
        """Vectorised draws as float64 (integer valued).

        With ``n_max`` the law is conditioned on s <= n_max.  Values above
        2^53 are the nearest float to the inverse-CDF solution.
        """
        g = rng_mod.as_generator(rng, rng_mod.SAMPLE)
        u = g.random(size)
        if n_max is None:
            return self._invert(1.0 - u)
        if n_max < 1:
            raise UsageError("n_max must be >= 1")
        self._ensure_cache(n_max + 1)
        floor = self._surv[n_max]  # S(n_max + 1)
        v = floor + (1.0 - u) * (1.0 - floor)
        return np.minimum(self._invert(v), float(n_max))

    def truncated_mass(self, n_max: int) -> float:
        """Pr[s <= n_max]."""
        return 1.0 - self.survival(n_max + 1)

    # -- entropy ------------------------------------------------------
    def entropy_enclosure(self, depth: int) -> tuple[float, float]:
        """Enclosure of -sum p log p from the first ``depth`` terms plus integral tail bounds."""
        c = self.c
        L = -math.log(c)
        total = 0.0
        chunk = 1 << 20
        for start in range(1, depth + 1, chunk):
            n = np.arange(start, min(depth, start + chunk - 1) + 1, dtype=np.float64)
            total += float(np.sum(c * n ** -ALPHA * (L + ALPHA * np.log(n))))

        def tail_integral(a):
            # int_a^inf c x^-5/4 (L + 5/4 log x) dx
            return c * 4.0 * a ** -0.25 * (L + ALPHA * (math.log(a) + 4.0))

        return total + tail_integral(depth + 1), total + tail_integral(depth)

    def entropy(self, tol: float = 1e-6, depth: int | None = None) -> float:
        """Shannon entropy (nats) with truncation error at most ``tol``."""
        if tol <= 0:
            raise UsageError("tol must be positive")
        if depth is None:
            depth = self.entropy_depth(tol)
        lo, hi = self.entropy_enclosure(depth)
        if hi - lo > 2 * tol:
            raise UsageError(f"depth {depth} too shallow for tol {tol}")
        return 0.5 * (lo + hi)

    def entropy_depth(self, tol: float) -> int:
        """Smallest power of two whose enclosure width is at most 2*tol."""
        c = self.c
        L = -math.log(c)
        depth = 1024
        while c * depth ** -ALPHA * (L + ALPHA * math.log(depth)) > 2 * tol:
            depth *= 2
        return depth


# ---------------------------------------------------------------------------
# record statistics


@dataclass
class TrajectoryStats:
    """Record statistics of one finite sequence (1-based k)."""

    M: np.ndarray
    next: np.ndarray  # 0 marks "beyond horizon"
    A: np.ndarray
    B: np.ndarray
    B_defined: np.ndarray
    ind_prime: int | None
    ind: int | None
    horizon: int

    def next_of(self, k: int) -> int | None:
        v = int(self.next[k - 1])
        return v or None


def trajectory_stats(s) -> TrajectoryStats:
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise UsageError("expected a non-empty 1-d sequence")
    if np.any(s < 1):
        raise UsageError("sequence entries must be >= 1")
    m = s.size
    M = np.maximum.accumulate(s)
    prev = np.concatenate([[0.0], M[:-1]])
    weak_record = s >= prev
    weak_record[0] = True
    nxt = np.zeros(m, dtype=np.int64)
    upcoming = 0
    for i in range(m - 1, -1, -1):
        # next(k) is the first weak record strictly after k
        nxt[i] = upcoming
        if weak_record[i]:
            upcoming = i + 1
    k = np.arange(1, m + 1, dtype=np.float64)
    A = M < k * k
    B_defined = nxt > 0
    B = np.zeros(m, dtype=bool)
    idx = np.nonzero(B_defined)[0]
    B[idx] = s[nxt[idx] - 1] == M[idx]
    bad = A | B
    if bad.any():
        last_bad = int(np.nonzero(bad)[0][-1]) + 1
        ind_prime = last_bad + 1 if last_bad < m else None
    else:
        ind_prime = 1
    ind = None
    if ind_prime is not None:
        v = int(nxt[ind_prime - 1])
        ind = v or None
    return TrajectoryStats(M=M, next=nxt, A=A, B=B, B_defined=B_defined,
                           ind_prime=ind_prime, ind=ind, horizon=m)


@dataclass(frozen=True)
class EventParams:
    eps: float
    K: int
    N: float
    m: int

    def __post_init__(self):
        if not 0 < self.eps < 0.125:
            raise UsageError("eps must lie in (0, 1/8)")
        if self.K < 1 or self.N < 1:
            raise UsageError("K and N must be >= 1")
        if self.K > self.m:
            raise UsageError("K must not exceed m")


def is_in_E(s, params: EventParams) -> bool:
    s = np.asarray(s, dtype=np.float64)
    if s.size < params.K:
        raise UsageError("sequence shorter than K")
    if s.size != params.m:
        raise UsageError(f"sequence length {s.size} != m = {params.m}")
    return bool(e_membership(s[None, :], params.K, params.N)[0])


def failure_indices(S: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per row: last k with M_k < k^2, and last k whose prefix max repeats (0 if none)."""
    S = np.asarray(S, dtype=np.float64)
    rows, m = S.shape
    cur = np.zeros(rows)
    cnt = np.zeros(rows, dtype=np.int64)
    j3 = np.zeros(rows, dtype=np.int64)
    j4 = np.zeros(rows, dtype=np.int64)
    for k in range(1, m + 1):
        x = S[:, k - 1]
        gt = x > cur
        eq = x == cur
        cnt = np.where(gt, 1, np.where(eq, cnt + 1, cnt))
        np.maximum(cur, x, out=cur)
        j3[cur < float(k) * k] = k
        j4[cnt > 1] = k
    return j3, j4


def e_membership(S: np.ndarray, K: int, N: float) -> np.ndarray:
    S = np.asarray(S, dtype=np.float64)
    j3, j4 = failure_indices(S)
    return (np.maximum(j3, j4) < K) & (S[:, :K].max(axis=1) <= N)


def wilson_interval(successes: int, n: int, z: float = 3.0) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass
class Calibration:
    eps: float
    m: int
    K: int
    N: float
    mass: float
    sigma: float
    ci: tuple
    samples: int
    seed: int
    target: float
    failures: dict = field(default_factory=dict)
    sweep: list = field(default_factory=list)

    def params(self) -> EventParams:
        return EventParams(self.eps, self.K, self.N, self.m)


def _sample_chunks(dist, seed, stream_id, samples, m, chunk):
    g = rng_mod.stream(seed, stream_id)
    done = 0
    while done < samples:
        rows = min(chunk, samples - done)
        yield dist.sample_array(g, (rows, m))
        done += rows


def calibrate_KN(dist: HeavyTailDist, eps: float, m: int, samples: int = 100_000,
                 seed: int = 0, chunk: int = 10_000) -> Calibration:
    """Empirical (K, N) for the event E at level 1 - eps.

    Sweep: K increases from 1; for each K, N is the smallest value at which
    the fraction of sampled sequences in E reaches 1 - eps + 3 sigma, with
    sigma = sqrt(eps (1 - eps) / samples).  The first K that admits such
    an N wins.
    """
    if not 0 < eps < 0.125:
        raise UsageError("eps must lie in (0, 1/8)")
    if m < 4:
        raise UsageError("m must be >= 4")
    sigma = math.sqrt(eps * (1 - eps) / samples)
    target = 1 - eps + 3 * sigma
    need = math.ceil(target * samples)

    j3_all, j4_all = [], []
    for S in _sample_chunks(dist, seed, rng_mod.CALIBRATE, samples, m, chunk):
        j3, j4 = failure_indices(S)
        j3_all.append(j3)
        j4_all.append(j4)
    j3 = np.concatenate(j3_all)
    j4 = np.concatenate(j4_all)
    J = np.maximum(j3, j4)
    counts = np.bincount(J, minlength=m + 1)
    ok_below = np.cumsum(counts)  # ok_below[K-1] = #{J < K}
    feasible = np.nonzero(ok_below[:m] >= need)[0]
    if feasible.size == 0:
        raise CalibrationFailure(
            f"no K <= m={m} reaches E-mass {target:.4f}: best fraction "
            f"{ok_below[m - 1] / samples:.4f}; property 3 failures at K=m: "
            f"{int(np.sum(j3 >= m))}, property 4 failures: {int(np.sum(j4 >= m))}")
    K = int(feasible[0]) + 1

    MK = np.concatenate([S[:, :K].max(axis=1)
                         for S in _sample_chunks(dist, seed, rng_mod.CALIBRATE, samples, m, chunk)])
    eligible = np.sort(MK[J < K])
    N = float(eligible[need - 1])
    inside = int(np.sum((J < K) & (MK <= N)))
    mass = inside / samples

    sweep = []
    for q in (0.5, 0.9, 0.99, 1.0):
        n_q = float(eligible[max(0, math.ceil(q * need) - 1)])
        sweep.append({"K": K, "N": n_q, "mass": float(np.sum((J < K) & (MK <= n_q)) / samples)})
    failures = {
        "property2": int(np.sum(MK > N)),
        "property3": int(np.sum(j3 >= K)),
        "property4": int(np.sum(j4 >= K)),
    }
    return Calibration(eps=eps, m=m, K=K, N=N, mass=mass, sigma=sigma,
                       ci=wilson_interval(inside, samples), samples=samples, seed=seed,
                       target=target, failures=failures, sweep=sweep)


def e_mass(dist: HeavyTailDist, params: EventParams, samples: int, seed: int,
           stream_id=rng_mod.HOLDOUT, chunk: int = 10_000) -> tuple[float, float]:
    """Monte Carlo estimate of p^m(E) and its standard error."""
    inside = 0
    for S in _sample_chunks(dist, seed, stream_id, samples, params.m, chunk):
        inside += int(np.sum(e_membership(S, params.K, params.N)))
    p = inside / samples
    return p, math.sqrt(max(p * (1 - p), 1e-300) / samples)


def record_event_rates(dist: HeavyTailDist, ks, samples: int, seed: int,
                       chunk: int = 20_000) -> list[dict]:
    """Empirical Pr[A_k] and E[1/M_k] next to exp(-4c sqrt k) and exp(-4c sqrt k) + 1/k^2."""
    ks = sorted(int(k) for k in ks)
    m = ks[-1]
    hits = np.zeros(len(ks))
    inv_sum = np.zeros(len(ks))
    inv_sq = np.zeros(len(ks))
    for S in _sample_chunks(dist, seed, rng_mod.RECORDS, samples, m, chunk):
        M = np.maximum.accumulate(S, axis=1)
        for i, k in enumerate(ks):
            mk = M[:, k - 1]
            hits[i] += np.sum(mk < k * k)
            inv_sum[i] += np.sum(1.0 / mk)
            inv_sq[i] += np.sum(1.0 / mk ** 2)
    out = []
    for i, k in enumerate(ks):
        bound = math.exp(-4 * dist.c * math.sqrt(k))
        freq = hits[i] / samples
        mean_inv = inv_sum[i] / samples
        var_inv = max(inv_sq[i] / samples - mean_inv ** 2, 0.0)
        out.append({
            "k": k,
            "freq_A": freq,
            "bound_A": bound,
            "sigma_A": math.sqrt(bound * (1 - bound) / samples),
            "mean_inv_M": mean_inv,
            "bound_inv_M": bound + 1.0 / k ** 2,
            "sigma_inv_M": math.sqrt(var_inv / samples),
        })
    return out
