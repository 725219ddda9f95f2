"""Euler-Lagrange source forms, the source + exact splitting, and horizontal primitives.

Everything here works at bounded jet order.  Primitives are found by an exact
linear solve over a finite ansatz; when the ansatz is too small the failure is
raised as :class:`NoPrimitiveInAnsatz`, never papered over.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import combinations, combinations_with_replacement
from typing import Iterable

from .bicomplex import Chart, LocalForm, d_h, d_v
from .errors import DegreeError, JetOrderError, NoPrimitiveInAnsatz, NotClosed
from .linalg import EchelonBasis
from .symexpr import ONE, ZERO, Const, Coord, Func, Jet, JetExpr
from .symexpr.core import func, mono_sort_key

MAX_ANSATZ_COLUMNS = 60000


# ---------------------------------------------------------------------------
# Source forms


@dataclass(frozen=True)
class SourceForm:
    """``sum_a E_a theta^a ^ vol`` together with its coefficients."""

    form: LocalForm
    coefficients: dict[str, JetExpr]

    @classmethod
    def from_coefficients(cls, chart: Chart, coefficients: dict[str, JetExpr]) -> "SourceForm":
        terms = {((Jet(a),), chart.coords): e for a, e in coefficients.items() if e}
        form = LocalForm(chart, 1, chart.n, terms)
        return cls(form, {a: e for a, e in coefficients.items() if e})

    @classmethod
    def from_form(cls, form: LocalForm) -> "SourceForm":
        if not is_source_form(form):
            raise DegreeError("form has contact factors of positive order")
        return cls(form, {ths[0].field: c for (ths, _), c in form.terms})

    @property
    def chart(self) -> Chart:
        return self.form.chart

    def coefficient(self, field_name: str) -> JetExpr:
        return self.coefficients.get(field_name, ZERO)

    def __eq__(self, other):
        if isinstance(other, SourceForm):
            return self.form == other.form
        return NotImplemented

    def __hash__(self):
        return hash(self.form)

    def __str__(self):
        return str(self.form)


@dataclass(frozen=True)
class Decomposition:
    source: SourceForm
    cartan: LocalForm

    def residual(self, lagrangian: LocalForm) -> LocalForm:
        """``d_v(L) - a - d_h(gamma)``; zero for a correct decomposition."""
        return d_v(lagrangian) - self.source.form - d_h(self.cartan)


def lagrangian_density(omega: LocalForm) -> JetExpr:
    chart = omega.chart
    if omega.bidegree != (0, chart.n):
        raise DegreeError(f"a Lagrangian density has bidegree (0,{chart.n}), got {omega.bidegree}")
    return omega.coefficient((), chart.coords)


def _multi_indices(coords: tuple[str, ...], max_order: int) -> list[tuple[str, ...]]:
    out: list[tuple[str, ...]] = []
    for k in range(max_order + 1):
        out.extend(combinations_with_replacement(coords, k))
    return out


def euler_lagrange(omega: LocalForm) -> SourceForm:
    """``E_a = sum_I (-1)^|I| D_I (dL/du^a_I)``."""
    chart = omega.chart
    lag = lagrangian_density(omega)
    cap = chart.jet_order
    fields = sorted(set(chart.fields) | {j.field for j in lag.jets()})
    pieces = []
    required = -1
    for j in lag.jets():
        dl = lag.partial(j)
        if dl:
            required = max(required, dl.max_jet_order() + j.order)
            pieces.append((j, dl))
    if required > cap:
        raise JetOrderError(required, cap, "Euler-Lagrange expression")
    coeffs = {a: ZERO for a in fields}
    for j, dl in sorted(pieces, key=lambda x: x[0].key):
        term = dl
        for mu in j.index:
            term = term.total_derivative(mu, cap)
        coeffs[j.field] = coeffs[j.field] + (term if j.order % 2 == 0 else -term)
    return SourceForm.from_coefficients(chart, coeffs)


def source_decompose(omega: LocalForm) -> Decomposition:
    """Split ``d_v(omega) = a + d_h(gamma)`` by repeated integration by parts.

    The highest-order contact factor ``theta_{J mu}`` is peeled first: with
    ``mu`` the last index of the sorted multi-index,

        P theta_{J mu} ^ vol = d_h(eps P theta_J ^ vol_mu) - D_mu P theta_J ^ vol,

    where ``vol_mu`` omits ``dx^mu`` and ``eps = (-1)^(position of mu)``.
    """
    chart = omega.chart
    lagrangian_density(omega)
    cap = chart.jet_order
    vol = chart.coords
    pending: dict[Jet, JetExpr] = {}
    for (ths, _), c in d_v(omega).terms:
        pending[ths[0]] = pending.get(ths[0], ZERO) + c
    gamma_raw = []
    while True:
        live = [j for j, c in pending.items() if c and j.order > 0]
        if not live:
            break
        top = max(live, key=lambda j: (j.order, j.key))
        coef = pending.pop(top)
        mu = top.index[-1]
        lower = Jet(top.field, top.index[:-1])
        pos = chart.position(mu)
        rest = tuple(c for c in vol if c != mu)
        gamma_raw.append((coef if pos % 2 == 0 else -coef, (lower,), rest))
        pending[lower] = pending.get(lower, ZERO) - coef.total_derivative(mu, cap)
    source = SourceForm.from_coefficients(chart, {j.field: c for j, c in pending.items() if j.order == 0})
    cartan = LocalForm.build(chart, 1, chart.n - 1, gamma_raw)
    return Decomposition(source, cartan)


def is_source_form(form: LocalForm) -> bool:
    if form.bidegree != (1, form.chart.n):
        raise DegreeError(f"source forms have bidegree (1,{form.chart.n}), got {form.bidegree}")
    return all(t.order == 0 for t in form.contact_factors())


# ---------------------------------------------------------------------------
# Ansatz spaces


@dataclass(frozen=True)
class Ansatz:
    """Finite search space for a horizontal primitive.

    Coefficients are products of at most ``max_degree`` factors drawn from the
    base coordinates, the jets of ``fields`` up to ``max_jet_order`` and the
    extra atoms (opaque functions, and in the oracle also constants).  Contact
    factors are ``theta^a_I`` with ``|I| <= max_contact_order``.
    """

    fields: tuple[str, ...]
    max_jet_order: int
    max_degree: int
    max_contact_order: int
    extra_atoms: tuple = field(default=())

    def widen(self, degree: int = 0, jet_order: int = 0, contact_order: int = 0) -> "Ansatz":
        return replace(self, max_degree=self.max_degree + degree,
                       max_jet_order=self.max_jet_order + jet_order,
                       max_contact_order=self.max_contact_order + contact_order)

    def describe(self) -> dict:
        return {
            "fields": list(self.fields),
            "max_jet_order": self.max_jet_order,
            "max_degree": self.max_degree,
            "max_contact_order": self.max_contact_order,
            "extra_atoms": [str(a) for a in self.extra_atoms],
        }


_COMPANIONS = {"sin": ("cos",), "cos": ("sin",)}


def infer_ansatz(eta: LocalForm, extra_degree: int = 1, keep_constants: bool = False) -> Ansatz:
    """Ansatz bounds read off the input form.

    With ``keep_constants`` opaque constants are ordinary coefficient atoms;
    otherwise they are factored out before solving.
    """
    chart = eta.chart
    parts: list[JetExpr] = []
    for _, c in eta.terms:
        parts.extend([c] if keep_constants else c.split_constants().values())
    fields = {j.field for e in parts for j in e.jets()} | {t.field for t in eta.contact_factors()}
    jet_order = max((e.max_jet_order() for e in parts), default=-1)
    contact = max((t.order for t in eta.contact_factors()), default=0)
    degree = max((e.degree() for e in parts), default=0) + extra_degree
    extras: dict[tuple, object] = {}
    for e in parts:
        for a in e.atoms():
            if isinstance(a, Func):
                extras[a.key] = a
                for other in _COMPANIONS.get(a.name, ()):
                    comp = func(other, a.arg)
                    for b in comp.atoms():
                        extras[b.key] = b
            elif isinstance(a, Const) and keep_constants:
                extras[a.key] = a
    cap = chart.jet_order - 1
    return Ansatz(
        fields=tuple(sorted(fields or chart.fields)),
        max_jet_order=min(jet_order, cap),
        max_degree=max(degree, 0),
        max_contact_order=min(contact, cap),
        extra_atoms=tuple(extras[k] for k in sorted(extras)),
    )


def _coefficient_monomials(chart: Chart, ansatz: Ansatz) -> list[JetExpr]:
    atoms: list = [Coord(c) for c in chart.coords]
    for a in ansatz.fields:
        atoms.extend(Jet(a, idx) for idx in _multi_indices(chart.coords, ansatz.max_jet_order))
    atoms.extend(ansatz.extra_atoms)
    seen: dict = {}
    for deg in range(ansatz.max_degree + 1):
        for combo in combinations_with_replacement(atoms, deg):
            e = ONE
            for a in combo:
                e = e * JetExpr.atom(a)
            if e:
                seen.setdefault(e.key, e)
    return sorted(seen.values(), key=lambda e: mono_sort_key(e.terms[-1][0]))


def _contact_wedges(chart: Chart, ansatz: Ansatz, p: int) -> list[tuple[Jet, ...]]:
    gens = sorted((Jet(a, idx) for a in ansatz.fields
                   for idx in _multi_indices(chart.coords, ansatz.max_contact_order)),
                  key=lambda j: j.key)
    return list(combinations(gens, p))


def ansatz_basis(chart: Chart, p: int, q: int, ansatz: Ansatz,
                 wedge_filter=None) -> list[tuple[JetExpr, tuple[Jet, ...], tuple[str, ...]]]:
    """Canonically ordered basis ``(coefficient, contact wedge, dx wedge)``."""
    monos = _coefficient_monomials(chart, ansatz)
    wedges = [w for w in _contact_wedges(chart, ansatz, p) if wedge_filter is None or wedge_filter(w)]
    dxs = list(combinations(chart.coords, q))
    size = len(monos) * len(wedges) * len(dxs)
    if size > MAX_ANSATZ_COLUMNS:
        raise NoPrimitiveInAnsatz(f"ansatz has {size} columns, above the limit {MAX_ANSATZ_COLUMNS}",
                                  bounds=ansatz.describe())
    return [(m, w, dx) for w in wedges for dx in dxs for m in monos]


def _vectorize(form: LocalForm) -> dict:
    vec = {}
    for (ths, dxs), coef in form.terms:
        for mono, c in coef.terms:
            vec[(mono, ths, dxs)] = c
    return vec


def _devectorize(chart: Chart, p: int, q: int, vec: dict) -> LocalForm:
    acc: dict[tuple, dict] = {}
    for (mono, ths, dxs), c in vec.items():
        acc.setdefault((ths, dxs), {})[mono] = Fraction(c)
    return LocalForm(chart, p, q, {k: JetExpr._raw(v) for k, v in acc.items()})


def _columns(chart: Chart, p: int, q: int, basis) -> list[dict]:
    return [_vectorize(d_h(LocalForm(chart, p, q, {(w, dx): m}))) for m, w, dx in basis]


def _check_closed(eta: LocalForm, allow_scalar: bool):
    chart = eta.chart
    if eta.p < 1 and not allow_scalar:
        raise DegreeError("horizontal primitives are only sought at vertical degree >= 1")
    if eta.q < 1:
        raise DegreeError("a (p,0)-form has no horizontal primitive")
    if eta.q < chart.n:
        r = d_h(eta)
        if r:
            raise NotClosed(f"input is not d_h-closed: d_h(eta) = {r}", residual=r)


def _touches(eta_wedges: set) -> callable:
    """Keep contact wedges that appear in the input or raise to one that does."""

    def keep(w: tuple[Jet, ...]) -> bool:
        if w in eta_wedges:
            return True
        for k, t in enumerate(w):
            for mu in {c for ws in eta_wedges for j in ws for c in j.index}:
                raised = tuple(sorted(w[:k] + (t.extend(mu),) + w[k + 1:], key=lambda j: j.key))
                if raised in eta_wedges:
                    return True
        return False

    return keep


def horizontal_primitive(eta: LocalForm, ansatz: Ansatz | None = None, *,
                         extra_degree: int = 1, allow_scalar: bool = False) -> LocalForm:
    """Solve ``d_h(gamma) = eta`` exactly, preferring the minimal-support solution.

    Opaque constants are factored out and each constant sector is solved
    separately.  The search first restricts to contact wedges related to the
    input and falls back to the full ansatz before giving up.
    """
    _check_closed(eta, allow_scalar)
    chart, p, q = eta.chart, eta.p, eta.q
    if not eta:
        return LocalForm.zero(chart, p, q - 1)
    ansatz = ansatz or infer_ansatz(eta, extra_degree)

    sectors: dict[tuple, dict] = {}
    for (ths, dxs), coef in eta.terms:
        for cmono, part in coef.split_constants().items():
            vec = sectors.setdefault(cmono, {})
            for mono, c in part.terms:
                vec[(mono, ths, dxs)] = c

    wedges = {ths for (ths, _), _ in eta.terms}
    filters = [_touches(wedges), None] if p > 0 else [None]
    last_residual = None
    for wf in filters:
        basis = ansatz_basis(chart, p, q - 1, ansatz, wf)
        echelon = EchelonBasis()
        for i, col in enumerate(_columns(chart, p, q - 1, basis)):
            echelon.add_column(i, col)
        gamma = LocalForm.zero(chart, p, q - 1)
        ok = True
        for cmono, rhs in sectors.items():
            res = echelon.solve(rhs)
            if not res.feasible:
                ok = False
                last_residual = _devectorize(chart, p, q, res.residual)
                break
            scale = JetExpr._raw({cmono: Fraction(1)})
            for idx, val in res.solution.items():
                m, w, dx = basis[idx]
                gamma = gamma + LocalForm(chart, p, q - 1, {(w, dx): m * scale * val})
        if ok:
            return gamma
    raise NoPrimitiveInAnsatz("no horizontal primitive within the ansatz",
                              residual=last_residual, bounds=ansatz.describe())


def primitive_oracle(eta: LocalForm, ansatz: Ansatz | None = None, *,
                     extra_degree: int = 1, allow_scalar: bool = False) -> LocalForm:
    """Brute-force counterpart of :func:`horizontal_primitive`.

    One linear system over the whole ansatz, constants treated as ordinary
    atoms, solved by sparse reduced row echelon form over QQ in sympy.
    """
    from sympy import QQ
    from sympy.polys.matrices import DomainMatrix

    _check_closed(eta, allow_scalar)
    chart, p, q = eta.chart, eta.p, eta.q
    ansatz = ansatz or infer_ansatz(eta, extra_degree, keep_constants=True)
    basis = ansatz_basis(chart, p, q - 1, ansatz)
    cols = _columns(chart, p, q - 1, basis)
    rhs = _vectorize(eta)
    rows: dict = {}
    for vec in cols + [rhs]:
        for k in vec:
            rows.setdefault(k, len(rows))
    ncols = len(cols)
    sparse: dict[int, dict[int, object]] = {}
    for j, vec in enumerate(cols + [rhs]):
        for k, v in vec.items():
            sparse.setdefault(rows[k], {})[j] = QQ(v.numerator, v.denominator)
    if not rows:
        return LocalForm.zero(chart, p, q - 1)
    mat = DomainMatrix(sparse, (len(rows), ncols + 1), QQ)
    reduced, pivots = mat.rref()
    if ncols in pivots:
        raise NoPrimitiveInAnsatz("no horizontal primitive within the ansatz (oracle)",
                                  residual=eta, bounds=ansatz.describe())
    entries = reduced.to_sparse().rep
    gamma = LocalForm.zero(chart, p, q - 1)
    for r, col in enumerate(pivots):
        val = entries.get(r, {}).get(ncols)
        if val:
            m, w, dx = basis[col]
            gamma = gamma + LocalForm(chart, p, q - 1,
                                      {(w, dx): m * Fraction(int(val.numerator), int(val.denominator))})
    return gamma


def closed_dimension(chart: Chart, p: int, q: int, ansatz: Ansatz) -> int:
    """Dimension of the d_h-closed subspace of the ansatz at bidegree (p,q)."""
    basis = ansatz_basis(chart, p, q, ansatz)
    echelon = EchelonBasis()
    for i, col in enumerate(_columns(chart, p, q, basis)):
        echelon.add_column(i, col)
    return len(basis) - len(echelon.pivots)


def jet_atoms(fields: Iterable[str], coords: tuple[str, ...], order: int) -> list[Jet]:
    return [Jet(a, idx) for a in fields for idx in _multi_indices(coords, order)]
