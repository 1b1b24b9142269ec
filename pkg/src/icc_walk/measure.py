"""Finitely supported (sub-)probability measures on the concrete groups.

A ``SparseMeasure`` keeps its atoms either as a dict keyed by canonical
elements or packed into int64 key rows.  Packed measures go through the
compiled or NumPy kernels.  Measures whose coordinates overflow int64 take
the pure Python dict path.

Total variation is the full l1 distance, ``sum_g |mu(g) - nu(g)|``, so two
measures with disjoint supports are at distance 2.

Mass dropped by truncation or pruning is carried in ``lost``.  Stored mass
plus ``lost`` is 1 for a probability measure.
"""
from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import SupportOverflow, UsageError
from .groups import FreeAbelian, Group, Heisenberg, LampElement, Lamplighter, HeisElement, Vector

DEFAULT_CAP = 50_000_000
_LIMIT = 1 << 61
_CHUNK_ROWS = int(os.environ.get("ICC_WALK_CHUNK_ROWS", 1 << 21))


def _default_memory() -> int:
    try:
        avail = os.sysconf("SC_AVPHYS_PAGES") * os.sysconf("SC_PAGE_SIZE")
    except (ValueError, OSError):
        avail = 4 << 30
    return int(os.environ.get("ICC_WALK_MEMORY", max(256 << 20, avail // 4)))


# bytes of packed partial results one convolution may hold
MEMORY_BUDGET = _default_memory()


def _kind(group: Group) -> int:
    if isinstance(group, FreeAbelian):
        return 0
    if isinstance(group, Heisenberg):
        return 1
    if isinstance(group, Lamplighter):
        return 2
    raise UsageError(f"no packed layout for {group!r}")


def encode_rows(group: Group, elements) -> np.ndarray:
    """Pack elements into int64 rows; raises OverflowError when impossible."""
    elements = list(elements)
    if isinstance(group, Lamplighter):
        width = max((len(x.lamps) for x in elements), default=0)
        rows = [[x.t, len(x.lamps), *x.lamps, *([0] * (width - len(x.lamps)))] for x in elements]
        arr = np.array(rows, dtype=np.int64).reshape(len(elements), 2 + width)
    else:
        arr = np.array([tuple(x) for x in elements], dtype=np.int64)
        arr = arr.reshape(len(elements), 3 if isinstance(group, Heisenberg) else group.d)
    if arr.size and int(np.abs(arr).max()) >= _LIMIT:
        raise OverflowError("coordinates exceed the packed range")
    return arr


def decode_rows(group: Group, keys: np.ndarray) -> list:
    rows = keys.tolist()
    if isinstance(group, Lamplighter):
        return [LampElement(tuple(r[2:2 + r[1]]), r[0]) for r in rows]
    if isinstance(group, Heisenberg):
        return [HeisElement(*r) for r in rows]
    return [Vector(r) for r in rows]


class SparseMeasure:
    """Finite map element -> mass, plus the mass known to be missing."""

    def __init__(self, group: Group, atoms: dict | None = None, lost: float = 0.0,
                 *, keys: np.ndarray | None = None, mass: np.ndarray | None = None,
                 renormalized: bool = False):
        self.group = group
        self.lost = float(lost)
        self.renormalized = renormalized
        self._atoms = None
        self._keys = None
        self._mass = None
        if keys is not None:
            keep = mass != 0
            self._keys = keys[keep] if not keep.all() else keys
            self._mass = mass[keep] if not keep.all() else mass
        else:
            self._atoms = {x: float(v) for x, v in (atoms or {}).items() if v != 0}

    # -- views ---------------------------------------------------------
    @property
    def atoms(self) -> dict:
        if self._atoms is None:
            self._atoms = dict(zip(decode_rows(self.group, self._keys), self._mass.tolist()))
        return self._atoms

    def packed(self) -> tuple[np.ndarray, np.ndarray]:
        if self._keys is None:
            elems = list(self._atoms)
            try:
                self._keys = encode_rows(self.group, elems)
            except OverflowError as exc:
                raise SupportOverflow(str(exc)) from None
            self._mass = np.array([self._atoms[x] for x in elems], dtype=np.float64)
        return self._keys, self._mass

    def is_packable(self) -> bool:
        try:
            self.packed()
        except SupportOverflow:
            return False
        return True

    @property
    def support_size(self) -> int:
        return len(self._mass) if self._mass is not None else len(self._atoms)

    @property
    def total(self) -> float:
        if self._mass is not None:
            return float(math.fsum(self._mass.tolist()))
        return math.fsum(self._atoms.values())

    def __len__(self):
        return self.support_size

    def __getitem__(self, x) -> float:
        return self.atoms.get(x, 0.0)

    def items(self):
        return self.atoms.items()

    def __repr__(self):
        return f"SparseMeasure({self.group!r}, {self.support_size} atoms, lost={self.lost:.3g})"

    def renormalize(self) -> "SparseMeasure":
        """The probability measure proportional to the stored atoms."""
        z = self.total
        if self._keys is not None:
            return SparseMeasure(self.group, keys=self._keys, mass=self._mass / z, renormalized=True)
        return SparseMeasure(self.group, {x: v / z for x, v in self._atoms.items()}, renormalized=True)

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        atoms = self.atoms
        inv = self.group.invert
        return all(abs(v - atoms.get(inv(x), 0.0)) <= tol for x, v in atoms.items())


def delta(group: Group, x=None) -> SparseMeasure:
    return SparseMeasure(group, {group.identity if x is None else x: 1.0})


def uniform(group: Group, elements) -> SparseMeasure:
    elements = list(elements)
    acc: dict = {}
    for x in elements:
        acc[x] = acc.get(x, 0.0) + 1.0 / len(elements)
    return SparseMeasure(group, acc)


def lazy_step(group: Group) -> SparseMeasure:
    """Uniform on {e} and the standard generators; 1/3 (d_-1 + d_0 + d_1) on Z."""
    return uniform(group, [group.identity, *group.generators()])


# -- packed helpers ------------------------------------------------------

def _pad(keys: np.ndarray, width: int) -> np.ndarray:
    if keys.shape[1] == width:
        return keys
    out = np.zeros((keys.shape[0], width), dtype=np.int64)
    out[:, :keys.shape[1]] = keys
    return out


def _concat_merge(parts: list[tuple[np.ndarray, np.ndarray]]):
    width = max(k.shape[1] for k, _ in parts)
    keys = np.concatenate([_pad(k, width) for k, _ in parts])
    mass = np.concatenate([m for _, m in parts])
    keys, mass = kernels.merge(keys, mass)
    if keys.shape[1] > 2 and keys.shape[0]:
        # trailing lamp columns can become all-zero padding after merging
        used = 2 + int(keys[:, 1].max())
        keys = keys[:, :max(used, 2)]
    return keys, mass


def _headroom_ok(group: Group, a: np.ndarray, b: np.ndarray) -> bool:
    if a.size == 0 or b.size == 0:
        return True
    ma = int(np.abs(a).max())
    mb = int(np.abs(b).max())
    if ma + mb >= _LIMIT:
        return False
    if isinstance(group, Heisenberg):
        return ma * mb + ma + mb < _LIMIT
    return True


def _packed_convolve(group, ka, ma, kb, mb, cap):
    kind = _kind(group)
    r = kb.shape[0]
    step = max(1, _CHUNK_ROWS // max(r, 1))
    parts = []
    rows = 0
    held = 0
    for s in range(0, ka.shape[0], step):
        prod = kernels.products(kind, ka[s:s + step], kb)
        w = (ma[s:s + step, None] * mb[None, :]).ravel()
        part = kernels.merge(prod, w)
        rows += part[0].shape[0]
        held += part[0].nbytes + part[1].nbytes
        if rows > 4 * cap:
            raise SupportOverflow(f"more than {4 * cap} partial atoms")
        if 3 * held > MEMORY_BUDGET:
            raise SupportOverflow(f"partial results need more than {MEMORY_BUDGET >> 20} MiB "
                                  f"({rows} atoms after {s + step} of {ka.shape[0]} left atoms)")
        parts.append(part)
    if len(parts) == 1:
        return parts[0]
    return _concat_merge(parts)


def _prune(keys, mass, prune):
    if prune > 0:
        keep = mass >= prune
        dropped = float(math.fsum(mass[~keep].tolist()))
        return keys[keep], mass[keep], dropped
    keep = mass != 0
    return keys[keep], mass[keep], 0.0


def _combine_lost(a: float, b: float) -> float:
    return a + b - a * b


def convolve(mu: SparseMeasure, nu: SparseMeasure, prune: float = 0.0,
             cap: int = DEFAULT_CAP) -> SparseMeasure:
    """(mu * nu)(z) = sum_x mu(x) nu(x^-1 z).

    Atoms below ``prune`` are dropped after full accumulation and their mass
    moves into ``lost``.
    """
    if mu.group != nu.group:
        raise UsageError("measures live on different groups")
    group = mu.group
    renorm = mu.renormalized and nu.renormalized
    if mu.is_packable() and nu.is_packable():
        ka, ma = mu.packed()
        kb, mb = nu.packed()
        if _headroom_ok(group, ka, kb):
            keys, mass = _packed_convolve(group, ka, ma, kb, mb, cap)
            keys, mass, dropped = _prune(keys, mass, prune)
            if keys.shape[0] > cap:
                raise SupportOverflow(f"support {keys.shape[0]} exceeds cap {cap}")
            return SparseMeasure(group, keys=keys, mass=mass,
                                 lost=_combine_lost(mu.lost, nu.lost) + dropped, renormalized=renorm)
    return _dict_convolve(mu, nu, prune, cap, renorm)


def _dict_convolve(mu, nu, prune, cap, renorm):
    comp = mu.group.compose
    acc: dict = {}
    right = list(nu.items())
    for x, a in mu.items():
        for y, b in right:
            z = comp(x, y)
            acc[z] = acc.get(z, 0.0) + a * b
        if len(acc) > 4 * cap:
            raise SupportOverflow(f"more than {4 * cap} partial atoms")
    dropped = []
    if prune > 0:
        kept = {}
        for z, v in acc.items():
            if v >= prune:
                kept[z] = v
            else:
                dropped.append(v)
        acc = kept
    if len(acc) > cap:
        raise SupportOverflow(f"support {len(acc)} exceeds cap {cap}")
    return SparseMeasure(mu.group, acc, lost=_combine_lost(mu.lost, nu.lost) + math.fsum(dropped),
                         renormalized=renorm)


def convolve_power(mu: SparseMeasure, m: int, prune: float = 0.0,
                   cap: int = DEFAULT_CAP) -> SparseMeasure:
    if m < 1:
        raise UsageError("m must be >= 1")
    out = mu
    for _ in range(m - 1):
        out = convolve(out, mu, prune, cap)
    return out


def translate(h, mu: SparseMeasure) -> SparseMeasure:
    """Left translate: the atom at x moves to h x."""
    group = mu.group
    group.check(h)
    if mu.is_packable():
        keys, mass = mu.packed()
        try:
            hk = encode_rows(group, [h])
        except OverflowError:
            hk = None
        if hk is not None and _headroom_ok(group, hk, keys):
            prod = kernels.products(_kind(group), hk, keys)
            k2, m2 = kernels.merge(prod, mass)
            return SparseMeasure(group, keys=k2, mass=m2, lost=mu.lost, renormalized=mu.renormalized)
    comp = group.compose
    return SparseMeasure(group, {comp(h, x): v for x, v in mu.items()}, lost=mu.lost,
                         renormalized=mu.renormalized)


def tv_norm(mu: SparseMeasure, nu: SparseMeasure) -> float:
    """sum_g |mu(g) - nu(g)| over the union of stored supports."""
    if mu.group != nu.group:
        raise UsageError("measures live on different groups")
    if mu.is_packable() and nu.is_packable():
        ka, ma = mu.packed()
        kb, mb = nu.packed()
        _, diff = _concat_merge([(ka, ma), (kb, -mb)])
        return float(math.fsum(np.abs(diff).tolist()))
    a, b = mu.atoms, nu.atoms
    keys = set(a) | set(b)
    return math.fsum(abs(a.get(x, 0.0) - b.get(x, 0.0)) for x in keys)


def tv_error(mu: SparseMeasure, nu: SparseMeasure) -> float:
    """Worst-case gap between the stored and the true distance."""
    return mu.lost + nu.lost


def measure_entropy(mu: SparseMeasure) -> float:
    if mu._mass is not None:
        m = mu._mass[mu._mass > 0]
        return float(-np.sum(m * np.log(m)))
    return -math.fsum(v * math.log(v) for v in mu.atoms.values() if v > 0)


@dataclass
class TVProfile:
    h: object
    prune: float
    rows: list = field(default_factory=list)
    reached: int = 0
    overflow: str | None = None

    def values(self) -> list[float]:
        return [r["tv"] for r in self.rows]

    def violations(self, slack: float = 1e-12, use_error: bool = False) -> list[int]:
        """Indices m where the profile increases beyond tolerance."""
        bad = []
        for prev, cur in zip(self.rows, self.rows[1:]):
            tol = slack + (prev["error"] + cur["error"] if use_error else 0.0)
            if cur["tv"] > prev["tv"] + tol:
                bad.append(cur["m"])
        return bad


def tv_profile(mu: SparseMeasure, h, m_max: int, prune: float = 0.0,
               cap: int = DEFAULT_CAP, ms=None) -> TVProfile:
    """||h mu^{*m} - mu^{*m}|| for m = 1..m_max with error bars from lost mass.

    ``ms`` restricts which m get a row; powers are still built one step at
    a time.  On overflow the profile stops and records the last m reached.
    """
    if m_max < 1:
        raise UsageError("m_max must be >= 1")
    wanted = set(range(1, m_max + 1)) if ms is None else {int(m) for m in ms if 1 <= m <= m_max}
    prof = TVProfile(h=h, prune=prune)
    power = None
    for m in range(1, m_max + 1):
        t0 = time.perf_counter()
        try:
            power = mu if power is None else convolve(power, mu, prune, cap)
            if m in wanted:
                tv = tv_norm(translate(h, power), power)
        except SupportOverflow as exc:
            prof.overflow = f"m={m}: {exc}"
            break
        prof.reached = m
        if m in wanted:
            prof.rows.append({
                "m": m,
                "tv": tv,
                "error": 2 * power.lost,
                "support_size": power.support_size,
                "wall_ms": (time.perf_counter() - t0) * 1e3,
            })
    return prof
