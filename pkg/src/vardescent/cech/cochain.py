"""Cochains of local forms on the nerve and the Cech coboundary."""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Mapping

from ..bicomplex import LocalForm
from ..errors import DegreeError, SchemaError
from ..symexpr import JetExpr
from .cover import Cover


class Cochain:
    """Values on the ``r``-simplices, each stored in the simplex's anchor (lowest) chart.

    Absent simplices carry the zero form.  Horizontal degree ``n + 1`` is
    allowed for the zero cochain only, as the formal target of ``d_h`` in
    top degree.
    """

    __slots__ = ("cover", "r", "p", "q", "values")

    def __init__(self, cover: Cover, r: int, p: int, q: int, values: Mapping[tuple, LocalForm] | None = None):
        self.cover = cover
        self.r, self.p, self.q = r, p, q
        clean: dict[tuple, LocalForm] = {}
        for s, v in (values or {}).items():
            s = tuple(s)
            if not v:
                continue
            if len(s) != r + 1 or s not in cover:
                raise SchemaError(f"{list(s)} is not a {r}-simplex of the nerve")
            if v.chart.index != s[0]:
                raise DegreeError(f"value on {list(s)} lives on chart {v.chart.label}, not the anchor chart {s[0]}")
            if v.bidegree != (p, q):
                raise DegreeError(f"inhomogeneous cochain: value on {list(s)} has bidegree {v.bidegree}, "
                                  f"expected {(p, q)}")
            clean[s] = v
        if q > cover.n and clean:
            raise DegreeError(f"horizontal degree {q} exceeds the base dimension {cover.n}")
        self.values = dict(sorted(clean.items()))

    @classmethod
    def zero(cls, cover: Cover, r: int, p: int, q: int) -> "Cochain":
        return cls(cover, r, p, q)

    @classmethod
    def constants(cls, cover: Cover, r: int, values: Mapping[tuple, object]) -> "Cochain":
        """Scalar cochain of constants (rationals or constant expressions)."""
        vals = {s: LocalForm.scalar(cover.chart(s[0]), JetExpr._coerce(v)) for s, v in values.items()}
        return cls(cover, r, 0, 0, vals)

    @property
    def bidegree(self) -> tuple[int, int]:
        return (self.p, self.q)

    def value(self, simplex) -> LocalForm:
        s = tuple(simplex)
        v = self.values.get(s)
        if v is not None:
            return v
        chart = self.cover.chart(s[0])
        if self.q > chart.n:
            from ..bicomplex import _zero_overflow
            return _zero_overflow(chart, self.p, self.q)
        return LocalForm.zero(chart, self.p, self.q)

    def scalar_value(self, simplex) -> JetExpr:
        return self.value(simplex).as_scalar()

    def is_zero(self) -> bool:
        return not self.values

    def __bool__(self):
        return bool(self.values)

    def _like(self, other: "Cochain"):
        if self.cover is not other.cover:
            raise SchemaError("cochains live on different covers")
        if self.r != other.r:
            raise DegreeError(f"Cech degrees differ: {self.r} vs {other.r}")
        if self.bidegree != other.bidegree and self and other:
            raise DegreeError(f"bidegrees differ: {self.bidegree} vs {other.bidegree}")

    def __add__(self, other: "Cochain") -> "Cochain":
        self._like(other)
        p, q = (self.p, self.q) if self else (other.p, other.q)
        vals = dict(self.values)
        for s, v in other.values.items():
            vals[s] = vals[s] + v if s in vals else v
        return Cochain(self.cover, self.r, p, q, vals)

    def __neg__(self) -> "Cochain":
        return Cochain(self.cover, self.r, self.p, self.q, {s: -v for s, v in self.values.items()})

    def __sub__(self, other: "Cochain") -> "Cochain":
        return self + (-other)

    def __mul__(self, k) -> "Cochain":
        if isinstance(k, (int, Fraction)) and k == 1:
            return self
        k = JetExpr._coerce(k)
        return Cochain(self.cover, self.r, self.p, self.q, {s: v * k for s, v in self.values.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, Cochain):
            return NotImplemented
        if self.r != other.r:
            return False
        if not self.values and not other.values:
            return True
        return self.bidegree == other.bidegree and self.values == other.values

    def __hash__(self):
        return hash((self.r, self.p, self.q, tuple(self.values.items())))

    def map(self, fn: Callable[[LocalForm], LocalForm], p: int, q: int) -> "Cochain":
        return Cochain(self.cover, self.r, p, q, {s: fn(v) for s, v in self.values.items()})

    def d_h(self) -> "Cochain":
        if self.q >= self.cover.n:
            return Cochain.zero(self.cover, self.r, self.p, self.q + 1)
        return self.map(lambda v: v.d_h(), self.p, self.q + 1)

    def d_v(self) -> "Cochain":
        return self.map(lambda v: v.d_v(), self.p + 1, self.q)

    def __str__(self):
        if not self.values:
            return "0"
        return "; ".join(f"[{','.join(map(str, s))}] {v}" for s, v in self.values.items())

    def __repr__(self):
        return f"Cochain(r={self.r}, ({self.p},{self.q}): {self})"


def cech_coboundary(c: Cochain) -> Cochain:
    """``(dc)_{i0..i(r+1)} = sum_k (-1)^k c(face_k)``, every face pulled to the anchor chart."""
    cover = c.cover
    vals = {}
    for s in cover.simplices(c.r + 1):
        acc = LocalForm.zero(cover.chart(s[0]), c.p, min(c.q, cover.n))
        if c.q <= cover.n:
            for k in range(len(s)):
                face = s[:k] + s[k + 1:]
                v = c.values.get(face)
                if v is None:
                    continue
                if k == 0:
                    v = cover.transition(s[0], s[1]).pull_form(v)
                acc = acc + v if k % 2 == 0 else acc - v
        vals[s] = acc
    return Cochain(cover, c.r + 1, c.p, c.q, vals)
