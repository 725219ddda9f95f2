"""Local forms of the variational bicomplex over a single chart.

Forms live in the contact basis: a monomial is a coefficient times
``theta^a_I1 ^ ... ^ theta^a_Ip ^ dx^mu1 ^ ... ^ dx^muq`` with all contact
factors in front.  The horizontal differential ``d_h`` and the vertical
differential ``d_v`` commute; on a form of vertical degree ``p`` the
horizontal differential equals ``(-1)^p`` times the anticommuting one, which
gives

    d_h(f) = sum_mu D_mu f dx^mu,      d_h(theta_I) = -sum_mu dx^mu ^ theta_{I mu},
    d_v(f) = sum_I df/du_I theta_I,    d_v(theta_I) = d_v(dx^mu) = 0.

In canonical ordering this reads ``d_h(w) = sum_mu L_mu(w_contact) ^ dx^mu ^ w_dx``
where ``L_mu`` is the prolonged total derivative (``L_mu theta_I = theta_{I mu}``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .errors import DegreeError, JetOrderError, MixedChartError
from .symexpr import DEFAULT_JET_ORDER, ONE, PI, ZERO, Const, Jet, JetExpr, Scope
from .symexpr.parser import parse_with_builder


@dataclass(frozen=True)
class Chart:
    """One member of the cover: ordered base coordinates and declared fields."""

    index: int
    coords: tuple[str, ...]
    fields: tuple[str, ...] = ("u",)
    jet_order: int = DEFAULT_JET_ORDER
    name: str = ""
    constants: tuple[Const, ...] = field(default=(PI,), compare=False)

    def __post_init__(self):
        if len(set(self.coords)) != len(self.coords):
            raise ValueError(f"duplicate base coordinate names in chart {self.label}")

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def label(self) -> str:
        return self.name or str(self.index)

    def scope(self) -> Scope:
        return Scope(self.coords, self.fields, {c.name: c for c in self.constants}, self.jet_order)

    def position(self, name: str) -> int:
        return self.coords.index(name)


def _sort_with_sign(items: Iterable, key) -> tuple[tuple, int]:
    """Sort distinct items, returning (sorted, parity sign); sign 0 on repeats."""
    seq = list(items)
    keys = [key(x) for x in seq]
    if len(set(keys)) != len(keys):
        return (), 0
    sign = 1
    # insertion sort keeps track of transpositions
    for i in range(1, len(seq)):
        j = i
        while j > 0 and keys[j - 1] > keys[j]:
            keys[j - 1], keys[j] = keys[j], keys[j - 1]
            seq[j - 1], seq[j] = seq[j], seq[j - 1]
            sign = -sign
            j -= 1
    return tuple(seq), sign


def _theta_key(j: Jet):
    return j.key


class LocalForm:
    """Homogeneous form of bidegree (p, q) in the contact basis of one chart."""

    __slots__ = ("chart", "p", "q", "_terms", "key", "_hash")

    def __init__(self, chart: Chart, p: int, q: int, terms: Mapping[tuple, JetExpr] | None = None):
        if p < 0 or q < 0 or q > chart.n:
            raise DegreeError(f"bidegree ({p},{q}) invalid for base dimension {chart.n}")
        self.chart = chart
        self.p = p
        self.q = q
        clean = {}
        for (thetas, dxs), c in (terms or {}).items():
            if not c:
                continue
            if len(thetas) != p or len(dxs) != q:
                raise DegreeError(f"monomial {thetas}, {dxs} is not of bidegree ({p},{q})")
            clean[(thetas, dxs)] = c
        pos = {c: i for i, c in enumerate(chart.coords)}
        items = sorted(clean.items(), key=lambda kv: (tuple(t.key for t in kv[0][0]),
                                                       tuple(pos[d] for d in kv[0][1])))
        self._terms = tuple(items)
        self.key = (chart.index, p, q, tuple(((tuple(t.key for t in th), dx), c.key)
                                             for (th, dx), c in items))
        self._hash = hash(self.key)

    # -- construction -----------------------------------------------------

    @classmethod
    def build(cls, chart: Chart, p: int, q: int,
              raw_terms: Iterable[tuple[JetExpr, Iterable[Jet], Iterable[str]]]) -> "LocalForm":
        """Collect unsorted monomials, sorting generators with sign tracking."""
        acc: dict[tuple, JetExpr] = {}
        pos = {c: i for i, c in enumerate(chart.coords)}
        for coef, thetas, dxs in raw_terms:
            if not coef:
                continue
            ths, s1 = _sort_with_sign(thetas, _theta_key)
            if not s1:
                continue
            dd, s2 = _sort_with_sign(dxs, pos.__getitem__)
            if not s2:
                continue
            k = (ths, dd)
            c = coef if s1 * s2 == 1 else -coef
            acc[k] = acc[k] + c if k in acc else c
        return cls(chart, p, q, acc)

    @classmethod
    def zero(cls, chart: Chart, p: int = 0, q: int = 0) -> "LocalForm":
        return cls(chart, p, q)

    @classmethod
    def scalar(cls, chart: Chart, coef) -> "LocalForm":
        return cls(chart, 0, 0, {((), ()): JetExpr._coerce(coef)})

    @classmethod
    def theta(cls, chart: Chart, field: str, index: Iterable[str] = ()) -> "LocalForm":
        j = Jet(field, index)
        if j.order > chart.jet_order:
            raise JetOrderError(j.order, chart.jet_order, f"contact form theta({j})")
        return cls(chart, 1, 0, {((j,), ()): ONE})

    @classmethod
    def dx(cls, chart: Chart, name: str) -> "LocalForm":
        return cls(chart, 0, 1, {((), (name,)): ONE})

    @classmethod
    def volume(cls, chart: Chart, coef=1) -> "LocalForm":
        """``coef dx^1 ^ ... ^ dx^n`` in chart order."""
        return cls(chart, 0, chart.n, {((), chart.coords): JetExpr._coerce(coef)})

    # -- inspection -------------------------------------------------------

    @property
    def bidegree(self) -> tuple[int, int]:
        return (self.p, self.q)

    @property
    def degree(self) -> int:
        return self.p + self.q

    @property
    def terms(self) -> tuple:
        return self._terms

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def coefficient(self, thetas: Iterable[Jet] = (), dxs: Iterable[str] = ()) -> JetExpr:
        """Coefficient of a canonically ordered generator monomial."""
        ths, s1 = _sort_with_sign(thetas, _theta_key)
        pos = {c: i for i, c in enumerate(self.chart.coords)}
        dd, s2 = _sort_with_sign(dxs, pos.__getitem__)
        for k, c in self._terms:
            if k == (ths, dd):
                return c if s1 * s2 == 1 else -c
        return ZERO

    def contact_factors(self) -> set[Jet]:
        return {t for (ths, _), _ in self._terms for t in ths}

    def max_jet_order(self) -> int:
        orders = [c.max_jet_order() for _, c in self._terms]
        orders += [t.order for t in self.contact_factors()]
        return max(orders, default=-1)

    def as_scalar(self) -> JetExpr:
        if self.bidegree != (0, 0):
            raise DegreeError(f"form of bidegree {self.bidegree} is not a scalar")
        return self._terms[0][1] if self._terms else ZERO

    # -- algebra ----------------------------------------------------------

    def _like(self, terms) -> "LocalForm":
        """Same chart and bidegree, new terms; overflow degrees stay formal zeros."""
        if self.q > self.chart.n:
            return _zero_overflow(self.chart, self.p, self.q)
        return LocalForm(self.chart, self.p, self.q, terms)

    def _check_compatible(self, other: "LocalForm"):
        if self.chart.index != other.chart.index:
            raise MixedChartError(f"forms on charts {self.chart.label} and {other.chart.label}")

    def __add__(self, other):
        if not isinstance(other, LocalForm):
            if isinstance(other, (int, Fraction, JetExpr)) and self.bidegree == (0, 0):
                other = LocalForm.scalar(self.chart, other)
            else:
                return NotImplemented
        self._check_compatible(other)
        if other.bidegree != self.bidegree:
            if not other:
                return self
            if not self:
                return other
            raise DegreeError(f"cannot add forms of bidegree {self.bidegree} and {other.bidegree}")
        d = dict(self._terms)
        for k, c in other._terms:
            d[k] = d[k] + c if k in d else c
        return self._like(d)

    __radd__ = __add__

    def __neg__(self):
        return self._like({k: -c for k, c in self._terms})

    def __sub__(self, other):
        if isinstance(other, LocalForm):
            return self + (-other)
        return self + (-JetExpr._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, LocalForm):
            return self.wedge(other)
        try:
            c = JetExpr._coerce(other)
        except TypeError:
            return NotImplemented
        return self._like({k: v * c for k, v in self._terms})

    __rmul__ = __mul__

    def __xor__(self, other):
        return self.wedge(other)

    def wedge(self, other: "LocalForm") -> "LocalForm":
        """Exterior product; graded-commutative in the total degree."""
        self._check_compatible(other)
        p, q = self.p + other.p, self.q + other.q
        if q > self.chart.n:
            return _zero_overflow(self.chart, p, q)
        raw = []
        for (th1, dx1), c1 in self._terms:
            for (th2, dx2), c2 in other._terms:
                # move th2 past dx1
                sign = -1 if (len(dx1) * len(th2)) % 2 else 1
                coef = c1 * c2
                raw.append((coef if sign == 1 else -coef, th1 + th2, dx1 + dx2))
        return LocalForm.build(self.chart, p, q, raw)

    def map_coefficients(self, fn: Callable[[JetExpr], JetExpr]) -> "LocalForm":
        return self._like({k: fn(c) for k, c in self._terms})

    # -- equality ---------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, LocalForm):
            if not self._terms and not other._terms:
                return self.chart.index == other.chart.index
            return self.key == other.key
        if isinstance(other, (int, Fraction, JetExpr)):
            if not other:
                return not self._terms
            return self.bidegree == (0, 0) and self.as_scalar() == other
        return NotImplemented

    def __hash__(self):
        return self._hash

    # -- differentials ----------------------------------------------------

    def d_h(self) -> "LocalForm":
        return d_h(self)

    def d_v(self) -> "LocalForm":
        return d_v(self)

    # -- printing ---------------------------------------------------------

    def __str__(self):
        return format_form(self)

    def __repr__(self):
        return f"LocalForm[{self.chart.label}]({self.p},{self.q}: {format_form(self)})"


class _OverflowZero(LocalForm):
    """Zero form whose nominal horizontal degree exceeds the base dimension."""


def _zero_overflow(chart: Chart, p: int, q: int) -> LocalForm:
    z = LocalForm.__new__(_OverflowZero)
    z.chart, z.p, z.q, z._terms = chart, p, q, ()
    z.key = (chart.index, p, q, ())
    z._hash = hash(z.key)
    return z


def lie_total(coef: JetExpr, thetas: tuple[Jet, ...], mu: str, cap: int) -> list[tuple[JetExpr, tuple[Jet, ...]]]:
    """Prolonged total derivative ``L_mu`` of ``coef * theta_1 ^ ... ^ theta_p``."""
    out = []
    dc = coef.total_derivative(mu, cap)
    if dc:
        out.append((dc, thetas))
    for k, t in enumerate(thetas):
        if t.order + 1 > cap:
            raise JetOrderError(t.order + 1, cap, f"horizontal differential of theta({t})")
        out.append((coef, thetas[:k] + (t.extend(mu),) + thetas[k + 1:]))
    return out


def d_h(form: LocalForm) -> LocalForm:
    """Horizontal differential (bidegree (p,q) -> (p,q+1))."""
    chart = form.chart
    if form.q >= chart.n:
        return _zero_overflow(chart, form.p, form.q + 1)
    cap = chart.jet_order
    raw = []
    for (thetas, dxs), coef in form.terms:
        for mu in chart.coords:
            if mu in dxs:
                continue
            for c, ths in lie_total(coef, thetas, mu, cap):
                raw.append((c, ths, (mu,) + dxs))
    return LocalForm.build(chart, form.p, form.q + 1, raw)


def d_v(form: LocalForm) -> LocalForm:
    """Vertical (variational) differential (bidegree (p,q) -> (p+1,q))."""
    if form.q > form.chart.n:
        return _zero_overflow(form.chart, form.p + 1, form.q)
    raw = []
    for (thetas, dxs), coef in form.terms:
        for j in sorted(coef.jets(), key=_theta_key):
            c = coef.partial(j)
            if c:
                raw.append((c, (j,) + thetas, dxs))
    return LocalForm.build(form.chart, form.p + 1, form.q, raw)


# ---------------------------------------------------------------------------
# Printing and parsing


def _format_generators(thetas, dxs) -> str:
    parts = [f"theta({t.field},[{','.join(t.index)}])" for t in thetas]
    parts += [f"dx({d})" for d in dxs]
    return "^".join(parts)


def format_form(form: LocalForm) -> str:
    if not form.terms:
        return "0"
    out = []
    for (thetas, dxs), coef in form.terms:
        gens = _format_generators(thetas, dxs)
        if not gens:
            body = str(coef)
        elif coef == 1:
            body = gens
        elif coef == -1:
            body = "-" + gens
        elif len(coef.terms) == 1 and not str(coef).startswith("-"):
            body = f"{coef}*{gens}"
        else:
            body = f"({coef})*{gens}"
        out.append(body)
    return " + ".join(out)


class FormSum:
    """Possibly inhomogeneous sum of local forms, keyed by bidegree.

    Exists mainly as a parsing intermediate and for raw ``du`` expansions.
    """

    __slots__ = ("chart", "parts")

    def __init__(self, chart: Chart, parts: Mapping[tuple[int, int], LocalForm] | None = None):
        self.chart = chart
        self.parts = {k: v for k, v in (parts or {}).items() if v}

    @classmethod
    def of(cls, x, chart: Chart) -> "FormSum":
        if isinstance(x, FormSum):
            return x
        if isinstance(x, LocalForm):
            return cls(chart, {x.bidegree: x})
        return cls(chart, {(0, 0): LocalForm.scalar(chart, x)})

    def __add__(self, other):
        other = FormSum.of(other, self.chart)
        parts = dict(self.parts)
        for k, v in other.parts.items():
            parts[k] = parts[k] + v if k in parts else v
        return FormSum(self.chart, parts)

    __radd__ = __add__

    def __neg__(self):
        return FormSum(self.chart, {k: -v for k, v in self.parts.items()})

    def __sub__(self, other):
        return self + (-FormSum.of(other, self.chart))

    def __rsub__(self, other):
        return FormSum.of(other, self.chart) - self

    def __mul__(self, other):
        if isinstance(other, FormSum):
            return self.wedge(other)
        c = JetExpr._coerce(other)
        return FormSum(self.chart, {k: v * c for k, v in self.parts.items()})

    __rmul__ = __mul__

    def wedge(self, other) -> "FormSum":
        other = FormSum.of(other, self.chart)
        out = FormSum(self.chart)
        for a in self.parts.values():
            for b in other.parts.values():
                w = a.wedge(b)
                if w:
                    out = out + w
        return out

    def homogeneous(self) -> LocalForm:
        if not self.parts:
            return LocalForm.zero(self.chart)
        if len(self.parts) > 1:
            raise DegreeError(f"form is inhomogeneous: bidegrees {sorted(self.parts)}")
        return next(iter(self.parts.values()))

    def __str__(self):
        return " + ".join(str(self.parts[k]) for k in sorted(self.parts)) or "0"


def raw_differential(chart: Chart, field: str, index: Iterable[str] = ()) -> FormSum:
    """``du^a_I = theta^a_I + sum_mu u^a_{I mu} dx^mu``."""
    j = Jet(field, index)
    if j.order + 1 > chart.jet_order:
        raise JetOrderError(j.order + 1, chart.jet_order, f"du({j})")
    th = LocalForm.theta(chart, field, j.index)
    horiz = LocalForm.build(chart, 0, 1, [(JetExpr.atom(j.extend(mu)), (), (mu,)) for mu in chart.coords])
    return FormSum(chart, {(1, 0): th, (0, 1): horiz})


class _Builder:
    def __init__(self, chart: Chart):
        self.chart = chart

    def generator(self, kind, args, pos):
        if kind == "theta":
            return FormSum.of(LocalForm.theta(self.chart, args[0], args[1]), self.chart)
        if kind == "du":
            return raw_differential(self.chart, args[0], args[1])
        return FormSum.of(LocalForm.dx(self.chart, args[0]), self.chart)

    def wedge(self, a, b):
        return FormSum.of(a, self.chart).wedge(b)

    def is_form(self, v):
        return isinstance(v, FormSum)


def parse_form_sum(text: str, chart: Chart) -> FormSum:
    """Parse text with ``theta(u,[..])``, ``dx(t)``, ``du(u,[..])`` and ``^`` as wedge."""
    v = parse_with_builder(text, chart.scope(), _Builder(chart))
    return FormSum.of(v, chart)


def parse_form(text: str, chart: Chart, bidegree: tuple[int, int] | None = None) -> LocalForm:
    """Parse a homogeneous form; ``bidegree`` selects (and fixes) the component."""
    fs = parse_form_sum(text, chart)
    if bidegree is None:
        return fs.homogeneous()
    if len(fs.parts) == 1 and bidegree not in fs.parts:
        raise DegreeError(f"expected bidegree {bidegree}, got {next(iter(fs.parts))}")
    return fs.parts.get(bidegree, LocalForm.zero(chart, *bidegree))
