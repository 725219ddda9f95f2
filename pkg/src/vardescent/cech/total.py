"""Graded elements of the Cech-Deligne total complex and its differentials.

A component is keyed by ``(p, k, r)``: vertical degree ``p``, Deligne
degree ``k`` and Cech degree ``r``.  The Deligne degree of an integer level
is 0 and that of a horizontal ``q``-form is ``q + 1``.  With these keys

    D     = d + (-1)^k dCech                      (k the Deligne degree)
    Delta = d_v + (-1)^p d + (-1)^(p+k) dCech

where ``d`` on a level component is the inclusion ``c -> c * period``.
The alternative convention ``(-1)^r`` (Cech degree) is available for audits;
it does not square to zero once ``d`` and ``dCech`` commute.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping

from ..errors import DegreeError
from ..symexpr import JetExpr
from .cochain import Cochain, cech_coboundary
from .cover import Cover

DELIGNE = "deligne-degree"
CECH = "cech-degree"
CONVENTIONS = (DELIGNE, CECH)


@dataclass(frozen=True, order=True)
class DeligneDegree:
    value: int

    @classmethod
    def of_form(cls, q: int) -> "DeligneDegree":
        return cls(q + 1)

    @classmethod
    def level(cls) -> "DeligneDegree":
        return cls(0)

    @property
    def is_level(self) -> bool:
        return self.value == 0

    @property
    def form_degree(self) -> int | None:
        return None if self.value == 0 else self.value - 1


class TotalElement:
    """Finite sum of homogeneous cochains keyed by ``(p, deligne, cech)``."""

    __slots__ = ("cover", "components")

    def __init__(self, cover: Cover, components: Mapping[tuple[int, int, int], Cochain] | None = None):
        self.cover = cover
        comps = {}
        for key, c in (components or {}).items():
            p, k, r = key
            if c.r != r or c.p != p:
                raise DegreeError(f"inhomogeneous input: cochain (r={c.r}, p={c.p}) filed under {key}")
            if c and (c.q != (0 if k == 0 else k - 1)):
                raise DegreeError(f"inhomogeneous input: {c.bidegree}-cochain filed under Deligne degree {k}")
            if c:
                comps[key] = c
        self.components = dict(sorted(comps.items()))

    @classmethod
    def of(cls, cover: Cover, *items: tuple[tuple[int, int, int], Cochain]) -> "TotalElement":
        out = cls(cover)
        for key, c in items:
            out = out + cls(cover, {key: c})
        return out

    def component(self, p: int, k: int, r: int) -> Cochain:
        c = self.components.get((p, k, r))
        if c is None:
            return Cochain.zero(self.cover, r, p, 0 if k == 0 else k - 1)
        return c

    def items(self) -> Iterator:
        return iter(self.components.items())

    def __add__(self, other: "TotalElement") -> "TotalElement":
        comps = dict(self.components)
        for key, c in other.components.items():
            comps[key] = comps[key] + c if key in comps else c
        return TotalElement(self.cover, comps)

    def __neg__(self) -> "TotalElement":
        return TotalElement(self.cover, {k: -c for k, c in self.components.items()})

    def __sub__(self, other: "TotalElement") -> "TotalElement":
        return self + (-other)

    def __mul__(self, s) -> "TotalElement":
        return TotalElement(self.cover, {k: c * s for k, c in self.components.items()})

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not self.components

    def __bool__(self):
        return bool(self.components)

    def __eq__(self, other):
        if not isinstance(other, TotalElement):
            return NotImplemented
        return self.components == other.components

    def __hash__(self):
        return hash(tuple(self.components.items()))

    def __str__(self):
        if not self.components:
            return "0"
        return " | ".join(f"(p={p},k={k},r={r}): {c}" for (p, k, r), c in self.components.items())


def _accumulate(acc: dict, key, c: Cochain):
    if not c:
        return
    acc[key] = acc[key] + c if key in acc else c


def _cech_part(acc: dict, key, c: Cochain, sign: int):
    p, k, r = key
    if r + 1 > c.cover.dimension:
        return
    dc = cech_coboundary(c)
    _accumulate(acc, (p, k, r + 1), dc if sign > 0 else -dc)


def _horizontal_part(acc: dict, key, c: Cochain, period: JetExpr, sign: int):
    p, k, r = key
    if k == 0:
        inc = c * period
        _accumulate(acc, (p, 1, r), inc if sign > 0 else -inc)
        return
    if k - 1 >= c.cover.n:
        return
    dc = c.d_h()
    _accumulate(acc, (p, k + 1, r), dc if sign > 0 else -dc)


def total_D(x: TotalElement, period=1, convention: str = DELIGNE) -> TotalElement:
    """``D = d + (-1)^k dCech`` (or ``(-1)^r`` under the Cech-degree convention)."""
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown sign convention {convention!r}")
    period = JetExpr._coerce(period)
    acc: dict = {}
    for key, c in x.items():
        p, k, r = key
        _horizontal_part(acc, key, c, period, 1)
        e = k if convention == DELIGNE else r
        _cech_part(acc, key, c, -1 if e % 2 else 1)
    return TotalElement(x.cover, acc)


def total_Delta(x: TotalElement, period=1) -> TotalElement:
    """``Delta = d_v + (-1)^p d + (-1)^(p+k) dCech`` on the tri-graded complex."""
    period = JetExpr._coerce(period)
    acc: dict = {}
    for key, c in x.items():
        p, k, r = key
        if k > 0:
            _accumulate(acc, (p + 1, k, r), c.d_v())
        _horizontal_part(acc, key, c, period, -1 if p % 2 else 1)
        _cech_part(acc, key, c, -1 if (p + k) % 2 else 1)
    return TotalElement(x.cover, acc)
