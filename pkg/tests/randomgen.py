"""Seeded random generators for expressions, forms, affine covers and cochains."""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations, combinations_with_replacement

from vardescent.bicomplex import Chart, LocalForm
from vardescent.cech import Cochain, Cover, TotalElement, Transition
from vardescent.symexpr import Coord, Jet, JetExpr, func

COORD_NAMES = {1: [("t",), ("s",)], 2: [("x", "y"), ("a", "b")]}


def jets(coords, fields=("u",), max_order=2):
    out = []
    for a in fields:
        for k in range(max_order + 1):
            out.extend(Jet(a, idx) for idx in combinations_with_replacement(coords, k))
    return out


def random_rational(rng: random.Random, span: int = 5) -> Fraction:
    while True:
        v = Fraction(rng.randint(-span, span), rng.choice((1, 1, 2, 3)))
        if v:
            return v


def random_expr(rng: random.Random, coords, fields=("u",), max_order=2, terms=3, max_deg=2,
                functions=False) -> JetExpr:
    """Sum of a few rational multiples of small power products."""
    atoms = [JetExpr.atom(Coord(c)) for c in coords] + [JetExpr.atom(j) for j in jets(coords, fields, max_order)]
    if functions:
        atoms += [func("sin", JetExpr.atom(Coord(coords[0]))), func("exp", JetExpr.atom(Coord(coords[-1])))]
    e = JetExpr(0)
    for _ in range(terms):
        m = JetExpr(random_rational(rng))
        for _ in range(rng.randint(0, max_deg)):
            m = m * rng.choice(atoms)
        e = e + m
    return e


def random_form(rng: random.Random, chart: Chart, p: int, q: int, max_order=2, terms=2, **kw) -> LocalForm:
    thetas = jets(chart.coords, chart.fields, max_order)
    raw = []
    for _ in range(terms):
        ths = rng.sample(thetas, p) if p <= len(thetas) else []
        dxs = rng.sample(list(chart.coords), q)
        raw.append((random_expr(rng, chart.coords, chart.fields, max_order, **kw), ths, dxs))
    return LocalForm.build(chart, p, q, raw)


def _affine(rng: random.Random, n: int):
    """Invertible rational matrix and offset."""
    while True:
        a = [[Fraction(rng.choice((-2, -1, 0, 1, 1, 2))) for _ in range(n)] for _ in range(n)]
        if n == 1:
            det = a[0][0]
        else:
            det = a[0][0] * a[1][1] - a[0][1] * a[1][0]
        if det:
            return a, [Fraction(rng.randint(-3, 3), rng.choice((1, 2))) for _ in range(n)]


def _inverse(a):
    if len(a) == 1:
        return [[1 / a[0][0]]]
    det = a[0][0] * a[1][1] - a[0][1] * a[1][0]
    return [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]]


def _compose_map(a_to, b_to, a_from, b_from, src_coords, tgt_coords):
    """Expressions for x_to = A_to A_from^{-1} (x_from - b_from) + b_to."""
    inv = _inverse(a_from)
    n = len(src_coords)
    xs = [JetExpr.atom(Coord(c)) for c in src_coords]
    ref = [sum((inv[r][k] * (xs[k] - b_from[k]) for k in range(n)), JetExpr(0)) for r in range(n)]
    return {tgt_coords[r]: sum((a_to[r][k] * ref[k] for k in range(n)), JetExpr(0)) + b_to[r] for r in range(n)}


def random_cover(rng: random.Random, n: int = 1, charts: int = 3, jet_order: int = 6, full: bool = True,
                 shifts: bool = True, max_simplex: int | None = None) -> Cover:
    """Charts related to a common reference by random affine maps; compatible by construction.

    Field shifts are differences of per-chart constants, so they compose.
    """
    names = COORD_NAMES[n]
    cs = [Chart(i, names[rng.randrange(len(names))], ("u",), jet_order) for i in range(charts)]
    maps = [_affine(rng, n) for _ in range(charts)]
    offsets = [Fraction(rng.randint(-4, 4)) if shifts else Fraction(0) for _ in range(charts)]
    top = max_simplex if max_simplex is not None else charts
    nerve = [s for k in range(2, top + 1) for s in combinations(range(charts), k)] if full else \
        [(i, i + 1) for i in range(charts - 1)]
    trans = {}
    for i, j in combinations(range(charts), 2):
        (ai, bi), (aj, bj) = maps[i], maps[j]
        fwd = _compose_map(aj, bj, ai, bi, cs[i].coords, cs[j].coords)
        inv = _compose_map(ai, bi, aj, bj, cs[j].coords, cs[i].coords)
        shift = {"u": JetExpr(offsets[j] - offsets[i])} if offsets[j] != offsets[i] else {}
        trans[(i, j)] = Transition(cs[i], cs[j], fwd, inv, shift)
    edges = {s for s in nerve if len(s) == 2}
    return Cover(cs, nerve, {e: t for e, t in trans.items() if e in edges})


def random_cochain(rng: random.Random, cover: Cover, r: int, p: int, q: int, density: float = 1.0, **kw) -> Cochain:
    vals = {}
    for s in cover.simplices(r):
        if rng.random() <= density:
            vals[s] = random_form(rng, cover.chart(s[0]), p, q, **kw)
    return Cochain(cover, r, p, q, vals)


def random_levels(rng: random.Random, cover: Cover, r: int) -> Cochain:
    return Cochain.constants(cover, r, {s: rng.randint(-3, 3) for s in cover.simplices(r)})


def random_total(rng: random.Random, cover: Cover, p_values=(0,), components: int = 3, **kw) -> TotalElement:
    """Element with a few random components of assorted (p, Deligne, Cech) degrees."""
    n = cover.n
    keys = [(p, k, r) for p in p_values for k in range(0 if p == 0 else 1, n + 2)
            for r in range(cover.dimension + 1)]
    out = {}
    for key in rng.sample(keys, min(components, len(keys))):
        p, k, r = key
        if k == 0:
            out[key] = random_levels(rng, cover, r)
        else:
            out[key] = random_cochain(rng, cover, r, p, k - 1, **kw)
    return TotalElement(cover, out)
