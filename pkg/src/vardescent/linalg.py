"""Exact sparse linear solves over the rationals."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Sequence

SparseVec = dict  # row key -> Fraction


@dataclass
class SolveResult:
    solution: dict[int, Fraction] | None
    residual: SparseVec
    rank: int

    @property
    def feasible(self) -> bool:
        return self.solution is not None


def _axpy(y: SparseVec, a: Fraction, x: SparseVec) -> None:
    """y <- y - a x, in place, dropping zeros."""
    for k, v in x.items():
        nv = y.get(k, 0) - a * v
        if nv:
            y[k] = nv
        else:
            y.pop(k, None)


class EchelonBasis:
    """Columns reduced incrementally, in order; earlier columns win as pivots.

    A column independent of all earlier ones becomes a pivot.  Solutions are
    supported on pivot columns only, which makes them the unique solution
    on the lexicographically earliest independent column set.
    """

    def __init__(self):
        self.pivots: list[tuple[Hashable, SparseVec, dict[int, Fraction]]] = []
        self.pivot_columns: list[int] = []

    def reduce(self, vec: SparseVec, combo: dict[int, Fraction] | None = None):
        v = dict(vec)
        c = dict(combo or {})
        for row, pv, pc in self.pivots:
            a = v.get(row)
            if a:
                f = a / pv[row]
                _axpy(v, f, pv)
                _axpy(c, f, pc)
        return v, c

    def add_column(self, index: int, col: SparseVec) -> bool:
        v, c = self.reduce(col, {index: Fraction(1)})
        if not v:
            return False
        row = next(iter(v))
        self.pivots.append((row, v, c))
        self.pivot_columns.append(index)
        return True

    def solve(self, rhs: SparseVec) -> SolveResult:
        b = dict(rhs)
        x: dict[int, Fraction] = {}
        for row, pv, pc in self.pivots:
            a = b.get(row)
            if a:
                f = a / pv[row]
                _axpy(b, f, pv)
                for k, val in pc.items():
                    nv = x.get(k, 0) + f * val
                    if nv:
                        x[k] = nv
                    else:
                        x.pop(k, None)
        if b:
            return SolveResult(None, b, len(self.pivots))
        return SolveResult(x, {}, len(self.pivots))


def solve_min_support(columns: Sequence[SparseVec], rhs: SparseVec) -> SolveResult:
    basis = EchelonBasis()
    for i, col in enumerate(columns):
        basis.add_column(i, col)
    return basis.solve(rhs)


def column_rank(columns: Sequence[SparseVec]) -> int:
    basis = EchelonBasis()
    for i, col in enumerate(columns):
        basis.add_column(i, col)
    return len(basis.pivots)
