"""Multivalued Lagrangian cocycles: verification and construction by descent."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from ..errors import IntegralityFailure, NoPrimitiveInAnsatz
from ..report import Check, VerificationReport
from ..symexpr import ONE, JetExpr, reciprocal
from ..variational import horizontal_primitive
from .cochain import Cochain, cech_coboundary
from .cover import Cover
from .total import DELIGNE, TotalElement, total_D


@dataclass
class LagrangianCocycle:
    """Components ``omega^(q)`` of bidegree ``(0, n-q)`` at Cech degree ``q`` plus an integer level.

    ``level`` maps ``(n+1)``-simplices to integers; ``None`` means it is read
    off the top Cech coboundary.  ``period`` is the unit in which that
    coboundary is measured.
    """

    cover: Cover
    components: list[Cochain]
    level: dict[tuple, Fraction] | None = None
    period: JetExpr = field(default_factory=lambda: ONE)

    def __post_init__(self):
        n = self.cover.n
        if len(self.components) != n + 1:
            raise ValueError(f"expected {n + 1} components, got {len(self.components)}")
        for q, c in enumerate(self.components):
            if c.r != q or (c and c.bidegree != (0, n - q)):
                raise ValueError(f"component {q} must be a (0,{n - q})-cochain of Cech degree {q}")
        self.period = JetExpr._coerce(self.period)
        if self.level is not None:
            self.level = {tuple(s): Fraction(v) for s, v in self.level.items() if v}

    @property
    def n(self) -> int:
        return self.cover.n

    def omega(self, q: int) -> Cochain:
        return self.components[q]

    def resolved_level(self) -> dict[tuple, Fraction]:
        if self.level is not None:
            return self.level
        levels, _ = _integer_levels(cech_coboundary(self.omega(self.n)), self.period)
        return levels

    def level_cochain(self) -> Cochain:
        return Cochain.constants(self.cover, self.n + 1, self.resolved_level())

    def to_total(self) -> TotalElement:
        n = self.n
        items = [((0, n - q + 1, q), c) for q, c in enumerate(self.components)]
        items.append(((0, 0, n + 1), self.level_cochain()))
        return TotalElement(self.cover, dict(items))

    @classmethod
    def from_total(cls, x: TotalElement, period=1) -> "LagrangianCocycle":
        cover = x.cover
        n = cover.n
        comps = [x.component(0, n - q + 1, q) for q in range(n + 1)]
        lev = x.component(0, 0, n + 1)
        level = {s: v.as_scalar().as_rational() for s, v in lev.values.items()}
        return cls(cover, comps, level, JetExpr._coerce(period))

    def densities(self) -> Cochain:
        return self.components[0]


def _integer_levels(top: Cochain, period: JetExpr) -> tuple[dict, dict]:
    """Split ``dCech omega^(n) / period`` into integer levels and defects."""
    inv = reciprocal(period)
    levels, defects = {}, {}
    for s in top.cover.simplices(top.r):
        e = top.scalar_value(s) * inv
        if not e.is_rational():
            defects[s] = e
            continue
        v = e.as_rational()
        if v.denominator != 1:
            defects[s] = v
        elif v:
            levels[s] = v
    return levels, defects


def verify_lagrangian_cocycle(omega: LagrangianCocycle, convention: str = DELIGNE) -> VerificationReport:
    """Descent relations, integrality of the top level, and ``D Omega = 0``."""
    n = omega.n
    rep = VerificationReport("lagrangian cocycle")
    for q in range(n):
        lhs = cech_coboundary(omega.omega(q))
        if (n - q) % 2:
            lhs = -lhs
        rep.expect_zero(f"descent[{q}]", lhs - omega.omega(q + 1).d_h(),
                        detail=f"(-1)^(n-{q}) dCech omega^({q}) - d omega^({q + 1})")
    top = cech_coboundary(omega.omega(n))
    levels, defects = _integer_levels(top, omega.period)
    rep.results["level"] = {",".join(map(str, s)): str(v) for s, v in levels.items()}
    shown = "; ".join(f"c[{','.join(map(str, s))}] = {v}" for s, v in defects.items())
    rep.add(Check("integrality", not defects, shown or None,
                  detail=f"dCech omega^({n}) / period must be an integer on every {n + 1}-simplex"))
    if defects:
        rep.results["defects"] = {",".join(map(str, s)): str(v) for s, v in defects.items()}
    if omega.level is not None:
        declared = omega.level_cochain() * omega.period
        rep.expect_zero("level", top - declared, detail=f"dCech omega^({n}) - c * period")
    if defects and omega.level is None:
        rep.note("D Omega is evaluated with the integer part of the level only")
    rep.expect_zero("total_differential", total_D(omega.to_total(), omega.period, convention),
                    detail=f"D Omega under the {convention} convention")
    return rep


def descend(densities: Cochain, period=1, extra_degree: int = 1) -> LagrangianCocycle:
    """Solve the descent relations upward from chart densities.

    Each step integrates ``(-1)^(n-q) dCech omega^(q)`` horizontally; the
    top Cech coboundary must then be an integer multiple of ``period``.
    """
    cover = densities.cover
    n = cover.n
    period = JetExpr._coerce(period)
    comps = [densities]
    for q in range(n):
        eta = cech_coboundary(comps[q])
        if (n - q) % 2:
            eta = -eta
        vals = {}
        for s in cover.simplices(q + 1):
            target = eta.value(s)
            try:
                vals[s] = horizontal_primitive(target, extra_degree=extra_degree, allow_scalar=True)
            except NoPrimitiveInAnsatz as exc:
                raise NoPrimitiveInAnsatz(
                    f"descent step {q + 1}: no primitive on overlap {list(s)} ({exc})",
                    residual=exc.residual if exc.residual is not None else target,
                    bounds=exc.bounds, step=q + 1, simplex=s) from exc
        comps.append(Cochain(cover, q + 1, 0, n - q - 1, vals))
    top = cech_coboundary(comps[n])
    levels, defects = _integer_levels(top, period)
    if defects:
        shown = ", ".join(f"[{','.join(map(str, s))}] {v}" for s, v in defects.items())
        raise IntegralityFailure(f"top Cech coboundary is not an integer multiple of the period: {shown}",
                                 defects=defects)
    return LagrangianCocycle(cover, comps, levels, period)

