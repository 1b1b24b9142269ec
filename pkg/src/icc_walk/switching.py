"""Switching and super-switching elements.

``g`` is switching for a finite symmetric ``X`` when X and gXg^-1 meet at
most in e, and super-switching when X meets none of gXg, gXg^-1, g^-1Xg,
g^-1Xg^-1 outside e.

Two oracles produce super-switching elements.  ``find_super_switching_exact``
searches the enumeration against an explicit set.  For the lamplighter
group, ``pick_super_switching_lamplighter`` writes one down from coordinate
bounds alone; the argument that its thresholds suffice is in that
function's docstring.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

from .errors import SearchFailure, UsageError
from .groups import LampElement, SymmetricSet


def is_switching(g, X: SymmetricSet) -> bool:
    grp = X.group
    e = grp.identity
    gi = grp.invert(g)
    for x in X:
        y = grp.compose(grp.compose(g, x), gi)
        if y != e and y in X:
            return False
    return True


def is_super_switching(g, X: SymmetricSet) -> bool:
    grp = X.group
    e = grp.identity
    gi = grp.invert(g)
    comp = grp.compose
    for x in X:
        left_g = comp(g, x)
        left_gi = comp(gi, x)
        for y in (comp(left_g, g), comp(left_g, gi), comp(left_gi, g), comp(left_gi, gi)):
            if y != e and y in X:
                return False
    return True


def sandwich_check(g, X: SymmetricSet) -> bool:
    """Brute force: g^w1 x g^w2 = y with x, y in X forces x = y = e."""
    grp = X.group
    e = grp.identity
    powers = (g, grp.invert(g))
    for x in X:
        for a in powers:
            ax = grp.compose(a, x)
            for b in powers:
                y = grp.compose(ax, b)
                if y in X and (x != e or y != e):
                    return False
    return True


def find_super_switching_exact(X: SymmetricSet, exclude: SymmetricSet, budget: int = 200_000):
    """First enumerated g that is super-switching for X and not in ``exclude``.

    Scans enumeration indices 1..budget and raises ``SearchFailure`` when
    nothing qualifies.
    """
    grp = X.group
    for i in range(1, budget + 1):
        g = grp.enumerate_elements(i)
        if g in exclude:
            continue
        if is_super_switching(g, X):
            return g
    raise SearchFailure(f"no super-switching element among the first {budget} enumerated elements")


@dataclass(frozen=True)
class SwitchingCertificate:
    step: int
    R_t: int
    R_s: int
    P: int
    T: int
    checks: tuple = field(default=())

    @property
    def rho(self) -> int:
        return (2 * self.step + 1) * (self.R_t + self.R_s)

    def recheck(self) -> list[tuple[str, bool]]:
        """Re-evaluate every threshold inequality from the stored fields."""
        n, rho, P, T = self.step, self.rho, self.P, self.T
        return [
            ("T > (8n+1)*R_t", T > (8 * n + 1) * self.R_t),
            ("T > 2*rho", T > 2 * rho),
            ("P > rho", P > rho),
            ("|P-T| > rho", abs(P - T) > rho),
        ]

    def valid(self) -> bool:
        return all(ok for _, ok in self.recheck())

    def to_json(self) -> dict:
        d = asdict(self)
        for key in ("step", "R_t", "R_s", "P", "T"):
            d[key] = str(d[key])
        d["checks"] = [{"name": name, "satisfied": ok} for name, ok in self.checks]
        return d

    @classmethod
    def from_json(cls, obj) -> "SwitchingCertificate":
        return cls(
            step=int(obj["step"]), R_t=int(obj["R_t"]), R_s=int(obj["R_s"]),
            P=int(obj["P"]), T=int(obj["T"]),
            checks=tuple((c["name"], bool(c["satisfied"])) for c in obj.get("checks", ())),
        )


def pick_super_switching_lamplighter(n: int, bounds: tuple[int, int]):
    """Choose g = ({P}, T) for step n from the bounds (R_t, R_s) of C_n.

    Every x = (f, t) in (C_n)^(2n+1) has |t| <= rho and lamps inside
    [-rho, rho], where rho = (2n+1)(R_t + R_s).  With T > 2 rho, P > rho and
    |P - T| > rho:

    * gxg and g^-1xg^-1 have shift +-2T + t, of modulus > rho.
    * gxg^-1 = (P xor (T + f) xor (P + t), t).  If t != 0 the lamp at P > rho
      survives, because T + f lies in [T - rho, T + rho], which excludes P.
      If t = 0 it equals (T + f, 0), which for f nonempty has a lamp beyond
      T - rho > rho.
    * g^-1xg = ((P - T) xor (f - T) xor (P - T + t), t).  If t != 0 the lamp
      at P - T survives, since P lies outside supp f, and |P - T| > rho.
      If t = 0 it is (f - T, 0), with lamps below -T + rho < -rho.

    So X meets the four sets only in e.  Every element of (C_n)^(8n+1) has
    |t| <= (8n+1) R_t < T, so g lies outside that ball as well.

    Rule: P = rho + 1, T = max((8n+1) R_t, 2 rho) + P + 1.
    """
    if n < 1:
        raise UsageError("step index must be >= 1")
    R_t, R_s = bounds
    rho = (2 * n + 1) * (R_t + R_s)
    P = rho + 1
    T = max((8 * n + 1) * R_t, 2 * rho) + P + 1
    cert = SwitchingCertificate(step=n, R_t=R_t, R_s=R_s, P=P, T=T)
    cert = SwitchingCertificate(step=n, R_t=R_t, R_s=R_s, P=P, T=T, checks=tuple(cert.recheck()))
    return LampElement((P,), T), cert


def certificate_element(cert: SwitchingCertificate) -> LampElement:
    return LampElement((cert.P,), cert.T)

