"""Pullback of jet expressions along chart transitions, prolonged to jets."""

from __future__ import annotations

import threading
from typing import Mapping, Sequence

from ..errors import JetOrderError, MissingTransition
from .core import DEFAULT_JET_ORDER, Coord, JetExpr, coord, jet


def inverse_jacobian(base_map: Mapping[str, JetExpr], inverse_map: Mapping[str, JetExpr],
                     source_coords: Sequence[str]) -> dict[tuple[str, str], JetExpr]:
    """Entries ``d x^nu / d y^mu`` written in the source coordinates ``x``.

    ``base_map`` gives the target coordinates ``y`` in terms of ``x`` and
    ``inverse_map`` gives ``x`` in terms of ``y``.
    """
    to_source = {Coord(y): f for y, f in base_map.items()}
    out = {}
    for y in base_map:
        for x in source_coords:
            out[(y, x)] = inverse_map[x].partial(Coord(y)).substitute(to_source)
    return out


class Prolongation:
    """Jet-level pullback from a target chart to a source chart.

    Target fields are related by ``u_target = u_source + shift(x)`` with a
    frozen shift depending on base coordinates only.  Jets are expressed via
    ``u_{I mu} = sum_nu (d x^nu / d y^mu) D_nu u_I``.  Jet images are memoised
    behind a lock, so one instance may be shared between threads.
    """

    def __init__(self, base_map: Mapping[str, JetExpr], inverse_map: Mapping[str, JetExpr] | None,
                 shifts: Mapping[str, JetExpr], source_coords: Sequence[str],
                 cap: int = DEFAULT_JET_ORDER):
        if inverse_map is None:
            raise MissingTransition("prolonged substitution needs the inverse base map")
        self.base_map = dict(base_map)
        self.inverse_map = dict(inverse_map)
        self.shifts = dict(shifts)
        self.source_coords = tuple(source_coords)
        self.cap = cap
        self.is_identity = (all(self.base_map.get(c) == coord(c) for c in self.source_coords)
                            and set(self.base_map) == set(self.source_coords)
                            and not any(self.shifts.values()))
        self._minv = None
        self._memo: dict[tuple[str, tuple[str, ...]], JetExpr] = {}
        self._lock = threading.Lock()

    def _jacobian(self):
        if self._minv is None:
            self._minv = inverse_jacobian(self.base_map, self.inverse_map, self.source_coords)
        return self._minv

    def jet_image(self, field: str, index: Sequence[str] = ()) -> JetExpr:
        index = tuple(sorted(index))
        if len(index) > self.cap:
            raise JetOrderError(len(index), self.cap, "prolonged substitution")
        with self._lock:
            return self._jet_image(field, index)

    def _jet_image(self, field: str, index: tuple[str, ...]) -> JetExpr:
        k = (field, index)
        if k in self._memo:
            return self._memo[k]
        if not index:
            val = jet(field) + self.shifts.get(field, JetExpr(0))
        else:
            prev = self._jet_image(field, index[:-1])
            mu = index[-1]
            val = JetExpr(0)
            minv = self._jacobian()
            for x in self.source_coords:
                m = minv[(mu, x)]
                if m:
                    val = val + m * prev.total_derivative(x, self.cap)
        self._memo[k] = val
        return val

    def pull(self, e: JetExpr) -> JetExpr:
        if self.is_identity:
            return e
        jets = e.jets()
        if not jets and not e.coords():
            return e
        mapping: dict = {Coord(y): f for y, f in self.base_map.items()}
        for j in jets:
            mapping[j] = self.jet_image(j.field, j.index)
        return e.substitute(mapping)


def substitute_prolonged(e: JetExpr, base_map: Mapping[str, JetExpr], inverse_map: Mapping[str, JetExpr] | None,
                         shifts: Mapping[str, JetExpr], source_coords: Sequence[str],
                         cap: int = DEFAULT_JET_ORDER) -> JetExpr:
    """Rewrite ``e`` (in target-chart variables) in source-chart variables."""
    return Prolongation(base_map, inverse_map, shifts, source_coords, cap).pull(e)


def identity_map(coords: Sequence[str]) -> dict[str, JetExpr]:
    return {c: coord(c) for c in coords}
