"""Exact jet-coordinate expressions kept in a canonical normal form.

An expression is a finite sum of rational coefficients times power products
of atoms.  Atoms are base coordinates, jet coordinates ``u^a_I``, opaque
constants (``pi`` and user-declared names) and applications of opaque
functions.  Every constructor returns the normal form, so two expressions
are equal exactly when their term tuples coincide.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, Mapping

from ..errors import JetOrderError

DEFAULT_JET_ORDER = 4


# ---------------------------------------------------------------------------
# Atoms


class Atom:
    __slots__ = ("key", "_hash")

    def __eq__(self, other):
        return isinstance(other, Atom) and self.key == other.key

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return self.key < other.key

    def __repr__(self):
        return f"{type(self).__name__}({self})"


class Coord(Atom):
    """A base coordinate, identified by its name within a chart."""

    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self.key = (0, name)
        self._hash = hash(self.key)

    def __str__(self):
        return self.name


class Jet(Atom):
    """Jet coordinate ``u^a_I``; the multi-index is stored sorted."""

    __slots__ = ("field", "index")

    def __init__(self, field: str, index: Iterable[str] = ()):
        self.field = field
        self.index = tuple(sorted(index))
        self.key = (1, field, len(self.index), self.index)
        self._hash = hash(self.key)

    @property
    def order(self) -> int:
        return len(self.index)

    def extend(self, name: str) -> "Jet":
        return Jet(self.field, self.index + (name,))

    def __str__(self):
        if not self.index:
            return self.field
        if "_" not in self.field and all(len(c) == 1 for c in self.index):
            return f"{self.field}_{''.join(self.index)}"
        return f"jet({self.field},[{','.join(self.index)}])"


class Const(Atom):
    """Opaque constant.  ``rule = (k, value)`` rewrites ``c^k`` to ``value``."""

    __slots__ = ("name", "rule")

    def __init__(self, name: str, rule: tuple[int, "JetExpr"] | None = None):
        self.name = name
        self.rule = rule
        self.key = (2, name)
        self._hash = hash(self.key)

    def __str__(self):
        return self.name


class Func(Atom):
    """Application of a registered opaque function to an expression."""

    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: "JetExpr"):
        self.name = name
        self.arg = arg
        self.key = (3, name, arg.key)
        self._hash = hash(self.key)

    def __str__(self):
        return f"{self.name}({self.arg})"


PI = Const("pi")


# ---------------------------------------------------------------------------
# Opaque functions


@dataclass(frozen=True)
class FunctionSpec:
    name: str
    derivative: Callable[["JetExpr"], "JetExpr"]
    numeric: Callable | None = None


FUNCTIONS: dict[str, FunctionSpec] = {}


def register_function(name: str, derivative: Callable[["JetExpr"], "JetExpr"], numeric=None) -> None:
    """Register an opaque function with its derivative rule ``f'(g)``."""
    FUNCTIONS[name] = FunctionSpec(name, derivative, numeric)


# ---------------------------------------------------------------------------
# Monomials and rewriting

# A monomial is a tuple of (atom, nonzero int exponent) sorted by atom key.
Monomial = tuple


def _mono_key(mono: Monomial) -> tuple:
    return tuple((a.key, e) for a, e in mono)


def mono_degree(mono: Monomial) -> int:
    return sum(e for _, e in mono)


def mono_sort_key(mono: Monomial) -> tuple:
    """Graded order: total degree first, then lexicographic on atom keys."""
    return (mono_degree(mono), _mono_key(mono))


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    powers: dict[Atom, int] = dict(m1)
    for a, e in m2:
        powers[a] = powers.get(a, 0) + e
    return tuple(sorted(((a, e) for a, e in powers.items() if e), key=lambda p: p[0].key))


def _rule_const_power(mono: Monomial):
    for pos, (a, e) in enumerate(mono):
        if isinstance(a, Const) and a.rule is not None:
            k, value = a.rule
            if e >= k:
                rest = mono[:pos] + (((a, e - k),) if e > k else ()) + mono[pos + 1:]
                return value * JetExpr._raw({rest: Fraction(1)})
    return None


def _rule_sin_squared(mono: Monomial):
    for pos, (a, e) in enumerate(mono):
        if isinstance(a, Func) and a.name == "sin" and e >= 2:
            rest = mono[:pos] + (((a, e - 2),) if e > 2 else ()) + mono[pos + 1:]
            cos_sq = JetExpr._raw({((Func("cos", a.arg), 2),): Fraction(1)})
            return (ONE - cos_sq) * JetExpr._raw({rest: Fraction(1)})
    return None


# Confluent, terminating rules applied to a fixed point after every product.
REWRITE_RULES: list[Callable[[Monomial], "JetExpr | None"]] = [_rule_const_power, _rule_sin_squared]


def register_rewrite(rule: Callable[[Monomial], "JetExpr | None"]) -> None:
    REWRITE_RULES.append(rule)


def _needs_rewrite(mono: Monomial) -> bool:
    for a, e in mono:
        if e >= 2 and (isinstance(a, Func) and a.name == "sin"
                       or isinstance(a, Const) and a.rule is not None):
            return True
    return len(REWRITE_RULES) > 2


# ---------------------------------------------------------------------------
# Expressions


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    raise TypeError(f"inexact coefficient {x!r}; symbolic coefficients must be rational")


class JetExpr:
    """Immutable expression in canonical normal form."""

    __slots__ = ("_terms", "key", "_hash")

    def __init__(self, value=0):
        if isinstance(value, JetExpr):
            terms = value._terms
        else:
            c = _as_fraction(value)
            terms = (((), c),) if c else ()
        self._set(terms)

    def _set(self, terms):
        self._terms = terms
        self.key = tuple((_mono_key(m), c) for m, c in terms)
        self._hash = hash(self.key)

    @classmethod
    def _raw(cls, d: Mapping[Monomial, Fraction]) -> "JetExpr":
        """Build from a monomial dict without applying rewrite rules."""
        obj = cls.__new__(cls)
        items = sorted(((m, c) for m, c in d.items() if c), key=lambda mc: mono_sort_key(mc[0]))
        obj._set(tuple(items))
        return obj

    @classmethod
    def from_terms(cls, d: Mapping[Monomial, Fraction]) -> "JetExpr":
        """Build from a monomial dict, rewriting to the normal form."""
        out: dict[Monomial, Fraction] = {}
        work = [(m, c) for m, c in d.items() if c]
        while work:
            m, c = work.pop()
            replaced = None
            if _needs_rewrite(m):
                for rule in REWRITE_RULES:
                    replaced = rule(m)
                    if replaced is not None:
                        break
            if replaced is None:
                out[m] = out.get(m, Fraction(0)) + c
            else:
                work.extend((m2, c * c2) for m2, c2 in replaced._terms)
        return cls._raw(out)

    @classmethod
    def atom(cls, a: Atom, power: int = 1) -> "JetExpr":
        return cls.from_terms({((a, power),): Fraction(1)})

    # -- inspection -------------------------------------------------------

    @property
    def terms(self) -> tuple:
        return self._terms

    def items(self):
        return iter(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def is_rational(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and self._terms[0][0] == ())

    def as_rational(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is not a rational constant")
        return self._terms[0][1] if self._terms else Fraction(0)

    def is_constant(self) -> bool:
        """True when only opaque constants occur (no coordinates, jets or functions)."""
        return all(isinstance(a, Const) for m, _ in self._terms for a, _ in m)

    def atoms(self) -> set[Atom]:
        """Top-level atoms (function arguments are not entered)."""
        return {a for m, _ in self._terms for a, _ in m}

    def all_atoms(self) -> set[Atom]:
        out: set[Atom] = set()
        for m, _ in self._terms:
            for a, _ in m:
                out.add(a)
                if isinstance(a, Func):
                    out |= a.arg.all_atoms()
        return out

    def jets(self) -> set[Jet]:
        return {a for a in self.all_atoms() if isinstance(a, Jet)}

    def coords(self) -> set[str]:
        return {a.name for a in self.all_atoms() if isinstance(a, Coord)}

    def max_jet_order(self) -> int:
        return max((j.order for j in self.jets()), default=-1)

    def degree(self) -> int:
        return max((mono_degree(m) for m, _ in self._terms), default=0)

    # -- arithmetic -------------------------------------------------------

    @staticmethod
    def _coerce(other) -> "JetExpr":
        if isinstance(other, JetExpr):
            return other
        return JetExpr(other)

    def __add__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        if not other._terms:
            return self
        if not self._terms:
            return other
        d = dict(self._terms)
        for m, c in other._terms:
            d[m] = d.get(m, Fraction(0)) + c
        return JetExpr._raw(d)

    __radd__ = __add__

    def __neg__(self):
        return JetExpr._raw({m: -c for m, c in self._terms})

    def __sub__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = Fraction(other)
            if not c:
                return ZERO
            return JetExpr._raw({m: c * k for m, k in self._terms})
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        if not self._terms or not other._terms:
            return ZERO
        d: dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms:
            for m2, c2 in other._terms:
                m = _mono_mul(m1, m2)
                d[m] = d.get(m, Fraction(0)) + c1 * c2
        return JetExpr.from_terms(d)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("exponent must be an integer")
        if k < 0:
            return reciprocal(self) ** (-k)
        out = ONE
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __truediv__(self, other):
        other = self._coerce(other)
        return self * reciprocal(other)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    # -- comparison -------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, JetExpr):
            return self.key == other.key
        try:
            return self.key == JetExpr(other).key
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return self._hash

    # -- calculus ---------------------------------------------------------

    def derive(self, atom_derivative: Callable[[Atom], "JetExpr | None"]) -> "JetExpr":
        """Apply the derivation fixed by its values on atoms.

        ``atom_derivative`` returns ``None`` (meaning zero) or the derivative
        of a non-function atom; function atoms are handled by the chain rule.
        """
        cache: dict[Atom, JetExpr | None] = {}

        def d_atom(a: Atom):
            if a in cache:
                return cache[a]
            if isinstance(a, Func):
                inner = a.arg.derive(atom_derivative)
                val = FUNCTIONS[a.name].derivative(a.arg) * inner if inner else None
            else:
                val = atom_derivative(a)
                if val is not None and not val:
                    val = None
            cache[a] = val
            return val

        acc = ZERO
        for mono, c in self._terms:
            for pos, (a, e) in enumerate(mono):
                da = d_atom(a)
                if da is None:
                    continue
                rest = mono[:pos] + (((a, e - 1),) if e != 1 else ()) + mono[pos + 1:]
                acc = acc + JetExpr.from_terms({rest: c * e}) * da
        return acc

    def partial(self, v: Atom) -> "JetExpr":
        """Formal partial derivative, all jet coordinates independent."""
        if isinstance(v, str):
            v = Coord(v)
        return self.derive(lambda a: ONE if a == v else None)

    def total_derivative(self, mu: str, cap: int = DEFAULT_JET_ORDER) -> "JetExpr":
        """``D_mu`` = partial_mu + sum u_{I mu} d/du_I, raising past the cap."""

        def d_atom(a: Atom):
            if isinstance(a, Coord):
                return ONE if a.name == mu else None
            if isinstance(a, Jet):
                if a.order + 1 > cap:
                    raise JetOrderError(a.order + 1, cap, f"D_{mu} {a}")
                return JetExpr.atom(a.extend(mu))
            return None

        return self.derive(d_atom)

    def substitute(self, mapping: Mapping[Atom, "JetExpr"]) -> "JetExpr":
        """Simultaneous substitution of atoms, entering function arguments."""
        if not mapping:
            return self
        cache: dict[Atom, JetExpr] = {}

        def image(a: Atom) -> JetExpr:
            if a not in cache:
                if a in mapping:
                    cache[a] = JetExpr._coerce(mapping[a])
                elif isinstance(a, Func):
                    cache[a] = func(a.name, a.arg.substitute(mapping))
                else:
                    cache[a] = JetExpr.atom(a)
            return cache[a]

        acc = ZERO
        for mono, c in self._terms:
            term = JetExpr(c)
            for a, e in mono:
                term = term * (image(a) ** e)
            acc = acc + term
        return acc

    def split_constants(self) -> dict[Monomial, "JetExpr"]:
        """Group terms by their opaque-constant factor.

        Returns ``{const_monomial: expr}`` with ``self == sum const * expr``
        and no opaque constants left inside the ``expr`` parts.
        """
        groups: dict[Monomial, dict[Monomial, Fraction]] = {}
        for mono, c in self._terms:
            cpart = tuple(p for p in mono if isinstance(p[0], Const))
            vpart = tuple(p for p in mono if not isinstance(p[0], Const))
            groups.setdefault(cpart, {})[vpart] = c
        return {k: JetExpr._raw(v) for k, v in groups.items()}

    # -- printing ---------------------------------------------------------

    def __str__(self):
        return format_expr(self)

    def __repr__(self):
        return f"JetExpr({format_expr(self)!r})"


ZERO = JetExpr(0)
ONE = JetExpr(1)


def _format_rational(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _format_mono(mono: Monomial) -> str:
    parts = []
    for a, e in mono:
        s = str(a)
        if e == 1:
            parts.append(s)
        elif e > 0:
            parts.append(f"{s}^{e}")
        else:
            parts.append(f"{s}^({e})")
    return "*".join(parts)


def format_expr(e: JetExpr) -> str:
    if not e._terms:
        return "0"
    out = []
    for i, (mono, c) in enumerate(reversed(e._terms)):
        neg = c < 0
        a = -c if neg else c
        if not mono:
            body = _format_rational(a)
        elif a == 1:
            body = _format_mono(mono)
        else:
            body = f"{_format_rational(a)}*{_format_mono(mono)}"
        if i == 0:
            out.append(("-" if neg else "") + body)
        else:
            out.append((" - " if neg else " + ") + body)
    return "".join(out)


# ---------------------------------------------------------------------------
# Constructors


def coord(name: str) -> JetExpr:
    return JetExpr.atom(Coord(name))


def jet(field: str, index: Iterable[str] = ()) -> JetExpr:
    return JetExpr.atom(Jet(field, index))


def const(name: str, rule: tuple[int, JetExpr] | None = None) -> JetExpr:
    return JetExpr.atom(Const(name, rule))


pi = JetExpr.atom(PI)


def reciprocal(e: JetExpr) -> JetExpr:
    """Exact inverse: Laurent inverse of a monomial, else the opaque ``inv``."""
    e = JetExpr._coerce(e)
    if not e._terms:
        raise ZeroDivisionError("division by the zero expression")
    if len(e._terms) == 1:
        mono, c = e._terms[0]
        inv_mono = tuple((a, -k) for a, k in mono)
        return JetExpr.from_terms({inv_mono: 1 / c})
    return func("inv", e)


def _pi_coefficient(arg: JetExpr) -> Fraction:
    for mono, c in arg._terms:
        if mono == ((PI, 1),):
            return c
    return Fraction(0)


def func(name: str, arg) -> JetExpr:
    """Apply an opaque function, folding trivial constant arguments."""
    arg = JetExpr._coerce(arg)
    if name not in FUNCTIONS:
        raise KeyError(f"unknown function {name!r}")
    if arg.is_rational():
        v = arg.as_rational()
        if v == 0 and name in ("sin",):
            return ZERO
        if v == 0 and name in ("cos", "exp"):
            return ONE
        if v == 1 and name == "log":
            return ZERO
        if name == "inv":
            return JetExpr(1 / v)
    if name in ("sin", "cos"):
        # 2*pi periodicity: keep the pure-pi coefficient in [0, 2).
        k = _pi_coefficient(arg)
        if k and not 0 <= k < 2:
            arg = arg - pi * (2 * (k // 2))
            return func(name, arg)
    return JetExpr.atom(Func(name, arg))


def _register_defaults() -> None:
    import numpy as np

    register_function("sin", lambda g: func("cos", g), np.sin)
    register_function("cos", lambda g: -func("sin", g), np.cos)
    register_function("exp", lambda g: func("exp", g), np.exp)
    register_function("log", lambda g: reciprocal(g), np.log)
    register_function("inv", lambda g: -(func("inv", g) ** 2), lambda x: 1.0 / x)


_register_defaults()


def total_derivative(e: JetExpr, mu: str, cap: int = DEFAULT_JET_ORDER) -> JetExpr:
    return e.total_derivative(mu, cap)


def total_derivative_multi(e: JetExpr, index: Iterable[str], cap: int = DEFAULT_JET_ORDER) -> JetExpr:
    """``D_I e`` for a multi-index ``I``."""
    for mu in index:
        e = e.total_derivative(mu, cap)
    return e


def partial(e: JetExpr, v) -> JetExpr:
    return e.partial(v)
