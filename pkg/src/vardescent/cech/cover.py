"""Abstract covers: charts, a face-closed nerve and frozen chart transitions."""

from __future__ import annotations

from itertools import combinations
from typing import Iterable, Mapping, Sequence

from ..bicomplex import Chart, LocalForm, d_h, d_v
from ..errors import MissingTransition, SchemaError
from ..symexpr import Coord, JetExpr, Prolongation, coord


class Transition:
    """Gluing data from chart ``source`` to chart ``target`` (source index < target index).

    ``base_map`` writes each target coordinate in source coordinates and
    ``inverse`` writes each source coordinate in target coordinates.  Fields
    glue by ``u_target = u_source + shift`` where the shift depends on the
    base point only, so variations glue.
    """

    def __init__(self, source: Chart, target: Chart, base_map: Mapping[str, JetExpr],
                 inverse: Mapping[str, JetExpr] | None, shifts: Mapping[str, JetExpr] | None = None):
        self.source = source
        self.target = target
        self.base_map = {y: JetExpr._coerce(base_map[y]) for y in target.coords}
        self.inverse = None if inverse is None else {x: JetExpr._coerce(inverse[x]) for x in source.coords}
        self.shifts = {a: JetExpr._coerce(s) for a, s in (shifts or {}).items() if s}
        for a, s in self.shifts.items():
            if s.jets():
                raise SchemaError(f"shift of field {a!r} on {self.pair} depends on jets; shifts must be frozen")
        self._prolongation: Prolongation | None = None
        self._theta_cache: dict = {}

    @classmethod
    def identity(cls, source: Chart, target: Chart) -> "Transition":
        fwd = {y: coord(x) for x, y in zip(source.coords, target.coords)}
        inv = {x: coord(y) for x, y in zip(source.coords, target.coords)}
        return cls(source, target, fwd, inv)

    @property
    def pair(self) -> tuple[int, int]:
        return (self.source.index, self.target.index)

    @property
    def prolongation(self) -> Prolongation:
        if self._prolongation is None:
            self._prolongation = Prolongation(self.base_map, self.inverse, self.shifts, self.source.coords,
                                              self.source.jet_order)
        return self._prolongation

    @property
    def is_identity(self) -> bool:
        return self.source.coords == self.target.coords and self.prolongation.is_identity

    def pull_expr(self, e: JetExpr) -> JetExpr:
        return self.prolongation.pull(e)

    def _theta_image(self, j) -> LocalForm:
        img = self._theta_cache.get(j)
        if img is None:
            u = self.prolongation.jet_image(j.field, j.index)
            img = d_v(LocalForm.scalar(self.source, u))
            self._theta_cache[j] = img
        return img

    def pull_form(self, form: LocalForm) -> LocalForm:
        """Pull a form on the target chart back to the source chart."""
        if form.chart.index != self.target.index:
            raise MissingTransition(f"form lives on chart {form.chart.label}, not on {self.target.label}")
        src = self.source
        if self.is_identity:
            return LocalForm(src, form.p, form.q, dict(form.terms))
        dx_images = {y: d_h(LocalForm.scalar(src, self.base_map[y])) for y in self.target.coords}
        out = LocalForm.zero(src, form.p, form.q)
        for (thetas, dxs), coef in form.terms:
            piece = LocalForm.scalar(src, self.pull_expr(coef))
            for t in thetas:
                piece = piece.wedge(self._theta_image(t))
            for y in dxs:
                piece = piece.wedge(dx_images[y])
            out = out + piece
        return out

    def inverse_residuals(self) -> dict[str, JetExpr]:
        """``inverse(base_map(x)) - x`` and ``base_map(inverse(y)) - y``; all zero when consistent."""
        if self.inverse is None:
            raise MissingTransition(f"transition {self.pair} has no inverse map")
        to_src = {Coord(y): f for y, f in self.base_map.items()}
        to_tgt = {Coord(x): g for x, g in self.inverse.items()}
        out = {}
        for x, g in self.inverse.items():
            out[f"{self.source.label}:{x}"] = g.substitute(to_src) - coord(x)
        for y, f in self.base_map.items():
            out[f"{self.target.label}:{y}"] = f.substitute(to_tgt) - coord(y)
        return out


def faces(simplex: Sequence[int]) -> list[tuple[int, ...]]:
    return [tuple(simplex[:k]) + tuple(simplex[k + 1:]) for k in range(len(simplex))]


def close_nerve(simplices: Iterable[Sequence[int]]) -> set[tuple[int, ...]]:
    """Smallest face-closed family containing the given simplices."""
    out: set[tuple[int, ...]] = set()
    for s in simplices:
        s = tuple(sorted(s))
        for k in range(1, len(s) + 1):
            out.update(combinations(s, k))
    return out


class Cover:
    """Charts indexed ``0..N-1``, a face-closed nerve and one transition per edge."""

    def __init__(self, charts: Sequence[Chart], nerve: Iterable[Sequence[int]],
                 transitions: Mapping[tuple[int, int], Transition]):
        self.charts = list(charts)
        for k, c in enumerate(self.charts):
            if c.index != k:
                raise SchemaError(f"chart at position {k} has index {c.index}")
        dims = {c.n for c in self.charts}
        if len(dims) != 1:
            raise SchemaError(f"charts disagree on the base dimension: {sorted(dims)}")
        self.n = dims.pop()
        simplices = {tuple(s) for s in nerve} | {(c.index,) for c in self.charts}
        for s in simplices:
            if list(s) != sorted(set(s)) or any(i < 0 or i >= len(self.charts) for i in s):
                raise SchemaError(f"nerve simplex {list(s)} is not a strictly increasing tuple of chart indices")
            for f in faces(s):
                if f and f not in simplices:
                    raise SchemaError(f"nerve is not closed under faces: {list(f)} missing (face of {list(s)})")
        self._simplices = simplices
        self.transitions = dict(transitions)
        for s in self.simplices(1):
            if s not in self.transitions:
                raise MissingTransition(f"no transition for overlap {list(s)}")

    @property
    def dimension(self) -> int:
        return max(len(s) for s in self._simplices) - 1

    def simplices(self, r: int) -> list[tuple[int, ...]]:
        return sorted(s for s in self._simplices if len(s) == r + 1)

    def __contains__(self, simplex) -> bool:
        return tuple(simplex) in self._simplices

    def chart(self, i: int) -> Chart:
        return self.charts[i]

    def transition(self, i: int, j: int) -> Transition:
        try:
            return self.transitions[(i, j)]
        except KeyError:
            raise MissingTransition(f"no transition for overlap ({i},{j})") from None

    def compatibility_residuals(self) -> dict[str, JetExpr]:
        """Composition defects on 2-simplices and inverse defects on edges.

        Base maps must satisfy ``f_ik = f_jk o f_ij`` and shifts
        ``s_ik = s_ij + s_jk o f_ij``.
        """
        out: dict[str, JetExpr] = {}
        for (i, j) in self.simplices(1):
            t = self.transition(i, j)
            if t.inverse is not None:
                for k, v in t.inverse_residuals().items():
                    out[f"inverse({i},{j}) {k}"] = v
        fields = sorted({a for c in self.charts for a in c.fields})
        for (i, j, k) in self.simplices(2):
            tij, tjk, tik = self.transition(i, j), self.transition(j, k), self.transition(i, k)
            via = {Coord(y): f for y, f in tij.base_map.items()}
            for z, f in tik.base_map.items():
                out[f"compose({i},{j},{k}) {z}"] = f - tjk.base_map[z].substitute(via)
            for a in fields:
                zero = JetExpr(0)
                s = tik.shifts.get(a, zero) - tij.shifts.get(a, zero) - tjk.shifts.get(a, zero).substitute(via)
                out[f"shift({i},{j},{k}) {a}"] = s
        return out

    def is_compatible(self) -> bool:
        return not any(self.compatibility_residuals().values())
