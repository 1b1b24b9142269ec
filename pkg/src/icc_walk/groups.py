"""Concrete countable groups with exact canonical elements.

Three families are provided:

* ``Lamplighter``: Z/2 wr Z, elements ``(lamps, t)`` where ``lamps`` is a
  strictly increasing tuple of lit positions.  Amenable and ICC.
* ``FreeAbelian(d)``: Z^d for d in {1, 2, 3}.  Amenable, not ICC.
* ``Heisenberg``: 3x3 integer unitriangular matrices ``(a, b, c)``.
  Amenable, not ICC.

Elements are tuple subclasses, so equality of encodings is group equality
and they hash cheaply.  All coordinates are Python ints.
"""
from __future__ import annotations

from typing import Iterable, NamedTuple

from .errors import BudgetExceeded, UsageError

_SAFE_INT = 2**53


class LampElement(NamedTuple):
    lamps: tuple
    t: int


class HeisElement(NamedTuple):
    a: int
    b: int
    c: int


class Vector(tuple):
    """Element of Z^d."""

    __slots__ = ()

    def __repr__(self):
        return f"Vector({tuple(self)!r})"


def _json_int(v: int):
    return str(v) if abs(v) >= _SAFE_INT else v


def _parse_int(v) -> int:
    if isinstance(v, bool):
        raise UsageError(f"not an integer: {v!r}")
    if isinstance(v, int):
        return v
    if isinstance(v, str):
        return int(v)
    raise UsageError(f"not an integer: {v!r}")


class Group:
    """Base class; subclasses supply the group law and encodings."""

    kind: str = ""
    amenable: bool = True
    icc: bool = False

    def __init__(self):
        self._enum = None

    # -- algebra -------------------------------------------------------
    @property
    def identity(self):
        raise NotImplementedError

    def compose(self, x, y):
        raise NotImplementedError

    def invert(self, x):
        raise NotImplementedError

    def check(self, x):
        raise NotImplementedError

    def generators(self) -> list:
        """Standard symmetric generating set used for enumeration."""
        raise NotImplementedError

    def product(self, elements: Iterable):
        out = self.identity
        for x in elements:
            out = self.compose(out, x)
        return out

    def power(self, x, k: int):
        if k < 0:
            x, k = self.invert(x), -k
        out = self.identity
        for _ in range(k):
            out = self.compose(out, x)
        return out

    def conjugate(self, x, g):
        """Return g^-1 x g."""
        return self.compose(self.compose(self.invert(g), x), g)

    # -- encodings -----------------------------------------------------
    def descriptor(self) -> dict:
        return {"kind": self.kind}

    def to_json(self, x):
        raise NotImplementedError

    def from_json(self, obj):
        raise NotImplementedError

    def __eq__(self, other):
        return isinstance(other, Group) and self.descriptor() == other.descriptor()

    def __hash__(self):
        return hash(tuple(sorted(self.descriptor().items())))

    def __repr__(self):
        return f"{type(self).__name__}()"

    # -- enumeration ---------------------------------------------------
    def enumerate_elements(self, index: int):
        """The ``index``-th element (1-based) of a fixed bijection N -> G.

        Order: breadth-first by word length in ``generators()``, ties broken
        by the natural tuple order of canonical encodings.  Index 1 is e.
        """
        if index < 1:
            raise UsageError("enumeration index must be >= 1")
        if self._enum is None:
            self._enum = _Enumerator(self)
        return self._enum.get(index)

    def index_of(self, x, limit: int) -> int | None:
        """Enumeration index of ``x`` if it is among the first ``limit``."""
        if self._enum is None:
            self._enum = _Enumerator(self)
        return self._enum.index_of(x, limit)


class _Enumerator:
    def __init__(self, group: Group):
        self.group = group
        self.items = [group.identity]
        self.seen = {group.identity: 1}
        self.sphere = [group.identity]

    def _grow(self):
        g = self.group
        gens = g.generators()
        new = set()
        for x in self.sphere:
            for s in gens:
                y = g.compose(x, s)
                if y not in self.seen:
                    new.add(y)
        self.sphere = sorted(new)
        for y in self.sphere:
            self.items.append(y)
            self.seen[y] = len(self.items)

    def get(self, index):
        while len(self.items) < index:
            self._grow()
        return self.items[index - 1]

    def index_of(self, x, limit):
        while len(self.items) < limit and x not in self.seen:
            self._grow()
        i = self.seen.get(x)
        return i if i is not None and i <= limit else None


class Lamplighter(Group):
    """Z/2 wreath Z with law (f,t)(f',t') = (f xor shift_t f', t+t')."""

    kind = "lamplighter"
    icc = True

    @property
    def identity(self):
        return LampElement((), 0)

    def element(self, lamps=(), t=0) -> LampElement:
        s = set()
        for p in lamps:
            s ^= {int(p)}
        return LampElement(tuple(sorted(s)), int(t))

    def check(self, x):
        if type(x) is not LampElement:
            raise UsageError(f"{x!r} is not a lamplighter element")
        return x

    def compose(self, x, y):
        if type(x) is not LampElement or type(y) is not LampElement:
            raise UsageError(f"cannot compose {x!r} and {y!r} in the lamplighter group")
        if not y.lamps:
            return LampElement(x.lamps, x.t + y.t)
        t = x.t
        if not x.lamps:
            lamps = tuple(p + t for p in y.lamps)
        else:
            s = set(x.lamps)
            s.symmetric_difference_update(p + t for p in y.lamps)
            lamps = tuple(sorted(s))
        return LampElement(lamps, t + y.t)

    def invert(self, x):
        self.check(x)
        t = x.t
        return LampElement(tuple(p - t for p in x.lamps), -t)

    def generators(self):
        return [LampElement((0,), 0), LampElement((), 1), LampElement((), -1)]

    def to_json(self, x):
        return {"lamps": [_json_int(p) for p in x.lamps], "t": _json_int(x.t)}

    def from_json(self, obj):
        lamps = tuple(_parse_int(p) for p in obj["lamps"])
        if any(a >= b for a, b in zip(lamps, lamps[1:])):
            raise UsageError("lamp positions must be strictly increasing")
        return LampElement(lamps, _parse_int(obj["t"]))

    def bounds(self, elements) -> tuple[int, int]:
        """(R_t, R_s): max |t| and max |lamp position| over ``elements``."""
        rt = rs = 0
        for x in elements:
            rt = max(rt, abs(x.t))
            if x.lamps:
                rs = max(rs, -x.lamps[0], x.lamps[-1])
        return rt, rs


class FreeAbelian(Group):
    kind = "free-abelian"

    def __init__(self, d: int = 1):
        super().__init__()
        if d not in (1, 2, 3):
            raise UsageError("free-abelian rank must be 1, 2 or 3")
        self.d = d

    def __repr__(self):
        return f"FreeAbelian({self.d})"

    @property
    def identity(self):
        return Vector((0,) * self.d)

    def element(self, *coords) -> Vector:
        if len(coords) != self.d:
            raise UsageError(f"expected {self.d} coordinates")
        return Vector(int(c) for c in coords)

    def check(self, x):
        if type(x) is not Vector or len(x) != self.d:
            raise UsageError(f"{x!r} is not an element of Z^{self.d}")
        return x

    def compose(self, x, y):
        if type(x) is not Vector or type(y) is not Vector or len(x) != self.d or len(y) != self.d:
            raise UsageError(f"cannot compose {x!r} and {y!r} in Z^{self.d}")
        return Vector(a + b for a, b in zip(x, y))

    def invert(self, x):
        self.check(x)
        return Vector(-a for a in x)

    def generators(self):
        out = []
        for i in range(self.d):
            for s in (1, -1):
                v = [0] * self.d
                v[i] = s
                out.append(Vector(v))
        return out

    def descriptor(self):
        return {"kind": self.kind, "d": self.d}

    def to_json(self, x):
        return [_json_int(a) for a in x]

    def from_json(self, obj):
        return self.check(Vector(_parse_int(a) for a in obj))


class Heisenberg(Group):
    """Integer Heisenberg group, (a,b,c)(a',b',c') = (a+a', b+b', c+c'+ab')."""

    kind = "heisenberg"

    @property
    def identity(self):
        return HeisElement(0, 0, 0)

    def element(self, a, b, c) -> HeisElement:
        return HeisElement(int(a), int(b), int(c))

    def check(self, x):
        if type(x) is not HeisElement:
            raise UsageError(f"{x!r} is not a Heisenberg element")
        return x

    def compose(self, x, y):
        if type(x) is not HeisElement or type(y) is not HeisElement:
            raise UsageError(f"cannot compose {x!r} and {y!r} in the Heisenberg group")
        return HeisElement(x.a + y.a, x.b + y.b, x.c + y.c + x.a * y.b)

    def invert(self, x):
        self.check(x)
        return HeisElement(-x.a, -x.b, x.a * x.b - x.c)

    def generators(self):
        return [HeisElement(1, 0, 0), HeisElement(-1, 0, 0),
                HeisElement(0, 1, 0), HeisElement(0, -1, 0)]

    def to_json(self, x):
        return [_json_int(x.a), _json_int(x.b), _json_int(x.c)]

    def from_json(self, obj):
        a, b, c = (_parse_int(v) for v in obj)
        return HeisElement(a, b, c)


def group_from_descriptor(desc) -> Group:
    """Build a group from ``{"kind": ...}`` or a short name."""
    if isinstance(desc, str):
        name = desc.lower()
        if name in ("lamplighter", "ll"):
            return Lamplighter()
        if name in ("heisenberg", "h3"):
            return Heisenberg()
        if name in ("z", "z1"):
            return FreeAbelian(1)
        if name in ("z2", "z3"):
            return FreeAbelian(int(name[1]))
        raise UsageError(f"unknown group {desc!r}")
    kind = desc.get("kind")
    if kind == "lamplighter":
        return Lamplighter()
    if kind == "heisenberg":
        return Heisenberg()
    if kind == "free-abelian":
        return FreeAbelian(int(desc.get("d", 1)))
    raise UsageError(f"unknown group kind {kind!r}")


class SymmetricSet:
    """Finite subset of a group closed under inversion."""

    __slots__ = ("group", "elements", "_bounds")

    def __init__(self, group: Group, elements: Iterable, *, close: bool = False):
        elems = set(elements)
        if close:
            elems |= {group.invert(x) for x in elems}
        else:
            for x in elems:
                if group.invert(x) not in elems:
                    raise UsageError(f"set is not symmetric: inverse of {x!r} missing")
        self.group = group
        self.elements = frozenset(elems)
        self._bounds = None

    def __contains__(self, x):
        return x in self.elements

    def __iter__(self):
        return iter(self.elements)

    def __len__(self):
        return len(self.elements)

    def __le__(self, other):
        return self.elements <= other.elements

    def __eq__(self, other):
        return isinstance(other, SymmetricSet) and self.elements == other.elements

    def __hash__(self):
        return hash(self.elements)

    def __repr__(self):
        return f"SymmetricSet({self.group!r}, {len(self)} elements)"

    @property
    def bounds(self) -> tuple[int, int]:
        """Lamplighter (R_t, R_s); for other groups the max |coordinate| twice."""
        if self._bounds is None:
            if isinstance(self.group, Lamplighter):
                self._bounds = self.group.bounds(self.elements)
            else:
                r = max((abs(c) for x in self.elements for c in x), default=0)
                self._bounds = (r, r)
        return self._bounds


def product_ball(S: SymmetricSet, k: int, budget: int = 2_000_000) -> SymmetricSet:
    """All products x_1...x_j with j <= k and x_i in S, together with e.

    Raises ``BudgetExceeded`` as soon as the ball holds more than ``budget``
    elements.
    """
    if k < 0:
        raise UsageError("k must be >= 0")
    g = S.group
    gens = list(S.elements)
    ball = {g.identity}
    frontier = [g.identity]
    for _ in range(k):
        new = []
        for x in frontier:
            for s in gens:
                y = g.compose(x, s)
                if y not in ball:
                    ball.add(y)
                    new.append(y)
            if len(ball) > budget:
                raise BudgetExceeded(f"product ball exceeded {budget} elements")
        if not new:
            break
        frontier = new
    out = SymmetricSet.__new__(SymmetricSet)
    out.group = g
    out.elements = frozenset(ball)
    out._bounds = None
    return out


def conjugate_probe(group: Group, x, count: int) -> set:
    """Distinct conjugates g^-1 x g for the first ``count`` enumerated g."""
    if count < 1:
        raise UsageError("count must be >= 1")
    return {group.conjugate(x, group.enumerate_elements(i)) for i in range(1, count + 1)}
