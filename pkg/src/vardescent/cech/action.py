"""Pairing a Lagrangian cocycle with a fundamental cycle: the action.

For ``n = 1`` the cycle is a list of intervals (one per cell) and seam
points; for ``n = 2`` cells are rectangles or triangles, seams are oriented
segments and codimension-two strata are vertices.  The action is

    S = sum_cells int omega^(0) + (-1)^n sum_seams sign * int omega^(1)
        + sum_vertices sign * omega^(2)(v)                     (n = 2)

with coordinates of every stratum given in its anchor chart.  A seam's sign
is its orientation as part of the boundary of the anchor cell (a point is
``+1`` where the anchor cell ends).  A vertex where charts ``i < j < k``
meet has sign ``+1`` when they occur counterclockwise around it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np

from ..errors import DegreeError, InconsistentField, QuadratureError
from ..symexpr import Coord, Jet, JetExpr, compile_numeric
from .cocycle import LagrangianCocycle
from .cover import Cover

Point = tuple[float, ...]


@dataclass(frozen=True)
class Cell:
    """A top-dimensional piece of the cycle inside one chart.

    ``kind`` is ``interval`` (``vertices = (a, b)`` as 1-tuples),
    ``rectangle`` (``vertices = (lower-left, upper-right)``) or ``triangle``
    (three vertices, counterclockwise for positive orientation).
    """

    chart: int
    kind: str
    vertices: tuple[Point, ...]

    def split(self) -> list["Cell"]:
        v = [np.asarray(p, dtype=float) for p in self.vertices]
        mid = lambda a, b: tuple(float(x) for x in (a + b) / 2)  # noqa: E731
        if self.kind == "interval":
            m = mid(v[0], v[1])
            return [Cell(self.chart, "interval", (self.vertices[0], m)),
                    Cell(self.chart, "interval", (m, self.vertices[1]))]
        if self.kind == "rectangle":
            (x0, y0), (x1, y1) = self.vertices
            xm, ym = (x0 + x1) / 2, (y0 + y1) / 2
            return [Cell(self.chart, "rectangle", ((a, b), (c, d)))
                    for a, c in ((x0, xm), (xm, x1)) for b, d in ((y0, ym), (ym, y1))]
        if self.kind == "triangle":
            a, b, c = self.vertices
            ab, bc, ca = mid(v[0], v[1]), mid(v[1], v[2]), mid(v[2], v[0])
            return [Cell(self.chart, "triangle", t) for t in
                    ((a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca))]
        raise DegreeError(f"unknown cell kind {self.kind!r}")


@dataclass(frozen=True)
class Stratum:
    """A seam (``len(simplex) == 2``) or vertex (``len(simplex) == 3``) in anchor coordinates.

    Seams of a 1-dimensional cycle and vertices are single points; seams of a
    2-dimensional cycle are segments ``(A, B)``.
    """

    simplex: tuple[int, ...]
    points: tuple[Point, ...]
    sign: int = 1


@dataclass
class FundamentalCycle:
    cells: list[Cell]
    seams: list[Stratum] = field(default_factory=list)
    vertices: list[Stratum] = field(default_factory=list)

    def refine(self) -> "FundamentalCycle":
        """Split every cell; seams are kept (segment integrals are refined separately)."""
        cells = [c2 for c in self.cells for c2 in c.split()]
        return FundamentalCycle(cells, list(self.seams), list(self.vertices))


@dataclass
class ActionResult:
    value: float
    cells: list[float]
    seams: list[float]
    vertices: list[float]
    max_refinement_change: float
    nodes: int

    def diagnostics(self) -> dict:
        return {
            "cell_contributions": self.cells,
            "seam_contributions": self.seams,
            "vertex_contributions": self.vertices,
            "max_refinement_change": self.max_refinement_change,
            "quadrature_nodes": self.nodes,
        }


@lru_cache(maxsize=None)
def _gauss(order: int):
    return np.polynomial.legendre.leggauss(order)


def _jet_values(field_expr: JetExpr, jet: Jet) -> JetExpr:
    e = field_expr
    for mu in jet.index:
        e = e.partial(Coord(mu))
    return e


class _Evaluator:
    """Numeric evaluation of forms along a closed-form field, per chart."""

    def __init__(self, cover: Cover, fields: Mapping[int, Mapping[str, JetExpr]]):
        self.cover = cover
        self.fields = {i: {a: JetExpr._coerce(e) for a, e in f.items()} for i, f in fields.items()}
        self._cache: dict = {}

    def substituted(self, chart: int, coef: JetExpr) -> JetExpr:
        f = self.fields.get(chart, {})
        mapping = {}
        for j in coef.jets():
            if j.field not in f:
                raise InconsistentField(f"no value for field {j.field!r} in chart {chart}")
            mapping[j] = _jet_values(f[j.field], j)
        return coef.substitute(mapping)

    def compiled(self, chart: int, coef: JetExpr) -> Callable:
        key = (chart, coef.key)
        fn = self._cache.get(key)
        if fn is None:
            expr = self.substituted(chart, coef)
            raw = compile_numeric(expr)
            coords = self.cover.chart(chart).coords

            def fn(pts, raw=raw, coords=coords):
                env = {c: pts[..., k] for k, c in enumerate(coords)}
                return np.broadcast_to(np.asarray(raw(env), dtype=float), pts.shape[:-1])

            self._cache[key] = fn
        return fn

    def field_value(self, chart: int, name: str, pts: np.ndarray) -> np.ndarray:
        return self.compiled(chart, JetExpr.atom(Jet(name)))(pts)


def _integrate_top(fn: Callable, cell: Cell, order: int) -> tuple[float, int]:
    x, w = _gauss(order)
    v = [np.asarray(p, dtype=float) for p in cell.vertices]
    if cell.kind == "interval":
        a, b = v[0][0], v[1][0]
        pts = ((b - a) / 2 * x + (a + b) / 2)[:, None]
        return float(np.sum(w * fn(pts)) * (b - a) / 2), order
    s = (x + 1) / 2
    ws = w / 2
    S, T = np.meshgrid(s, s, indexing="ij")
    W = np.outer(ws, ws)
    if cell.kind == "rectangle":
        (x0, y0), (x1, y1) = v
        pts = np.stack([x0 + (x1 - x0) * S, y0 + (y1 - y0) * T], axis=-1)
        return float(np.sum(W * fn(pts)) * (x1 - x0) * (y1 - y0)), order * order
    if cell.kind == "triangle":
        a, b, c = v
        pts = a + S[..., None] * (b - a) + (S * T)[..., None] * (c - b)
        det = (b - a)[0] * (c - a)[1] - (b - a)[1] * (c - a)[0]
        return float(np.sum(W * S * fn(pts)) * det), order * order
    raise DegreeError(f"unknown cell kind {cell.kind!r}")


def _refined(integrate: Callable[[int], float], tol: float) -> tuple[float, float]:
    coarse = integrate(1)
    fine = integrate(2)
    change = abs(fine - coarse)
    if change > tol * max(1.0, abs(fine)):
        raise QuadratureError(f"quadrature did not converge: refinement changed the value by {change:.3e}")
    return fine, change


def _check_field(cover: Cover, ev: _Evaluator, simplex: tuple[int, ...], pts: np.ndarray, tol: float):
    i = simplex[0]
    for j in simplex[1:]:
        t = cover.transition(i, j)
        fwd = [compile_numeric(t.base_map[y]) for y in t.target.coords]
        env = {c: pts[:, k] for k, c in enumerate(t.source.coords)}
        img = np.stack([np.broadcast_to(np.asarray(f(env), dtype=float), pts.shape[:1]) for f in fwd], axis=-1)
        for a in sorted(ev.fields.get(j, {})):
            shift = compile_numeric(t.shifts.get(a, JetExpr(0)))
            lhs = ev.field_value(j, a, img)
            rhs = ev.field_value(i, a, pts) + np.asarray(shift(env), dtype=float)
            err = float(np.max(np.abs(lhs - rhs)))
            if err > tol:
                raise InconsistentField(f"field {a!r} does not glue on {list(simplex)}: mismatch {err:.3e} "
                                        f"between charts {i} and {j}")


def evaluate_action(omega: LagrangianCocycle, cycle: FundamentalCycle,
                    fields: Mapping[int, Mapping[str, JetExpr]], quad_order: int = 16,
                    tol: float = 1e-9, seam_tol: float = 1e-9) -> ActionResult:
    """Numerically pair ``omega`` with ``cycle`` along a closed-form field."""
    cover = omega.cover
    n = cover.n
    if n not in (1, 2):
        raise DegreeError(f"action pairing is implemented for base dimension 1 or 2, not {n}")
    ev = _Evaluator(cover, fields)
    nodes = 0
    max_change = 0.0

    cell_vals = []
    for cell in cycle.cells:
        chart = cover.chart(cell.chart)
        coef = omega.omega(0).value((cell.chart,)).coefficient((), chart.coords)
        fn = ev.compiled(cell.chart, coef)

        def integrate(parts: int, cell=cell, fn=fn):
            nonlocal nodes
            pieces = [cell] if parts == 1 else cell.split()
            total = 0.0
            for piece in pieces:
                v, k = _integrate_top(fn, piece, quad_order)
                total += v
                nodes += k
            return total

        val, change = _refined(integrate, tol)
        max_change = max(max_change, change)
        cell_vals.append(val)

    seam_vals = []
    seam_weight = -1.0 if n % 2 else 1.0
    for st in cycle.seams:
        s = tuple(st.simplex)
        form = omega.omega(1).value(s)
        pts = np.asarray(st.points, dtype=float)
        if n == 1:
            _check_field(cover, ev, s, pts, seam_tol)
            val = float(ev.compiled(s[0], form.as_scalar())(pts)[0])
        else:
            a, b = pts[0], pts[1]
            _check_field(cover, ev, s, np.stack([a, (a + b) / 2, b]), seam_tol)
            coords = cover.chart(s[0]).coords
            parts_fn = [(ev.compiled(s[0], form.coefficient((), (c,))), (b - a)[k]) for k, c in enumerate(coords)]

            def integrate(parts: int, a=a, b=b, parts_fn=parts_fn):
                nonlocal nodes
                x, w = _gauss(quad_order)
                total = 0.0
                for m in range(parts):
                    lo, hi = m / parts, (m + 1) / parts
                    tt = (hi - lo) / 2 * x + (lo + hi) / 2
                    p = a + tt[:, None] * (b - a)
                    dens = sum(fn(p) * d for fn, d in parts_fn)
                    total += float(np.sum(w * dens) * (hi - lo) / 2)
                    nodes += quad_order
                return total

            val, change = _refined(integrate, tol)
            max_change = max(max_change, change)
        seam_vals.append(seam_weight * st.sign * val)

    vertex_vals = []
    for st in cycle.vertices:
        if n != 2:
            raise DegreeError("vertex strata only occur for base dimension 2")
        s = tuple(st.simplex)
        pts = np.asarray(st.points, dtype=float)
        _check_field(cover, ev, s, pts, seam_tol)
        form = omega.omega(2).value(s)
        vertex_vals.append(st.sign * float(ev.compiled(s[0], form.as_scalar())(pts)[0]))

    total = float(sum(cell_vals) + sum(seam_vals) + sum(vertex_vals))
    return ActionResult(total, cell_vals, seam_vals, vertex_vals, max_change, nodes)


def parse_point(values: Sequence) -> Point:
    return tuple(float(v) for v in values)
