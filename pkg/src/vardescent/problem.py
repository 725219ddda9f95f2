"""Problem files: JSON documents validated against a shipped schema, then resolved."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

from .bicomplex import Chart, LocalForm, parse_form
from .cech import Cell, Cochain, Cover, FundamentalCycle, LagrangianCocycle, Stratum, Transition, descend
from .errors import DanglingReference, DegreeError, ParseError, SchemaError, UndeclaredIdentifier
from .symexpr import DEFAULT_JET_ORDER, ONE, PI, Const, JetExpr, Scope, eval_numeric, parse_expr
from .theorem_engine import FieldSolutionSample

WILDCARD = "*"


def problem_schema() -> dict:
    return json.loads(resources.files("vardescent").joinpath("data/problem.schema.json").read_text("utf-8"))


def fixture_path(name: str) -> Path:
    """Path of a problem file shipped with the package (e.g. ``"theta1"``)."""
    p = resources.files("vardescent").joinpath(f"data/problems/{name}.json")
    return Path(str(p))


@dataclass
class Problem:
    name: str
    n: int
    jet_order: int
    period: JetExpr
    fields: tuple[str, ...]
    charts: list[Chart]
    cover: Cover
    densities: Cochain
    cocycle_components: list[Cochain] | None = None
    level: dict[tuple, Fraction] | None = None
    cycle: FundamentalCycle | None = None
    section: dict[int, dict[str, JetExpr]] | None = None
    solution: FieldSolutionSample | None = None
    digest: str = ""
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def has_cocycle(self) -> bool:
        return self.cocycle_components is not None

    def lagrangian_cocycle(self, extra_degree: int = 1) -> LagrangianCocycle:
        """The declared cocycle if the file carries one, else the one obtained by descent."""
        if self.cocycle_components is not None:
            return LagrangianCocycle(self.cover, [self.densities] + self.cocycle_components,
                                     self.level, self.period)
        return descend(self.densities, self.period, extra_degree)

    def chart_index(self, label: str) -> int:
        for c in self.charts:
            if c.name == label:
                return c.index
        raise DanglingReference(f"unknown chart {label!r}")


class _Resolver:
    def __init__(self, doc: dict, jet_order: int | None):
        self.doc = doc
        self.n = doc["dimension"]
        self.jet_order = jet_order or doc.get("jet_order", DEFAULT_JET_ORDER)
        self.fields = tuple(doc.get("fields", ["u"]))
        self.constants = [PI]
        for k, c in enumerate(doc.get("constants", [])):
            if c["name"] == "pi":
                continue
            rule = None
            if "power" in c:
                value = self.expr(c["value"], Scope((), ()), f"constants/{k}/value")
                rule = (c["power"], value)
            self.constants.append(Const(c["name"], rule))
        self.charts: list[Chart] = []
        self.ids: dict[str, int] = {}
        for k, c in enumerate(doc["charts"]):
            if c["id"] in self.ids:
                raise SchemaError(f"duplicate chart id {c['id']!r}", f"charts/{k}/id")
            if len(c["coords"]) != self.n:
                raise SchemaError(f"chart has {len(c['coords'])} coordinates, dimension is {self.n}",
                                  f"charts/{k}/coords")
            self.ids[c["id"]] = k
            self.charts.append(Chart(k, tuple(c["coords"]), self.fields, self.jet_order, c["id"],
                                     tuple(self.constants)))

    # -- references and expressions ------------------------------------

    def chart(self, label: str, path: str) -> Chart:
        try:
            return self.charts[self.ids[label]]
        except KeyError:
            raise DanglingReference(f"unknown chart {label!r}", path) from None

    def simplex(self, labels, path: str) -> tuple[int, ...]:
        if isinstance(labels, str):
            labels = [s.strip() for s in labels.split(",")]
        idx = [self.chart(lab, path).index for lab in labels]
        if len(set(idx)) != len(idx):
            raise SchemaError(f"repeated chart in simplex {labels}", path)
        return tuple(sorted(idx))

    def scope(self, chart: Chart | None, with_fields: bool = True) -> Scope:
        coords = chart.coords if chart is not None else ()
        return Scope(coords, self.fields if with_fields else (), {c.name: c for c in self.constants},
                     self.jet_order)

    def expr(self, text: str, scope: Scope, path: str) -> JetExpr:
        try:
            return parse_expr(text, scope)
        except UndeclaredIdentifier as exc:
            raise DanglingReference(str(exc), path) from exc
        except ParseError as exc:
            err = ParseError(f"{path}: {exc}")
            err.position, err.text = exc.position, exc.text
            raise err from exc

    def number(self, value: Any, path: str) -> float:
        if isinstance(value, (int, float)):
            return float(value)
        return float(eval_numeric(self.expr(value, self.scope(None, False), path), {}))

    def point(self, values, path: str) -> tuple[float, ...]:
        pt = tuple(self.number(v, f"{path}/{k}") for k, v in enumerate(values))
        if len(pt) != self.n:
            raise SchemaError(f"point has {len(pt)} coordinates, dimension is {self.n}", path)
        return pt

    def per_chart(self, mapping: dict, path: str) -> dict[int, Any]:
        out: dict[int, Any] = {}
        if WILDCARD in mapping:
            for c in self.charts:
                out[c.index] = mapping[WILDCARD]
        for label, v in mapping.items():
            if label != WILDCARD:
                out[self.chart(label, f"{path}/{label}").index] = v
        return out

    def field_map(self, mapping: dict, path: str) -> dict[int, dict[str, JetExpr]]:
        out = {}
        for i, fmap in self.per_chart(mapping, path).items():
            chart = self.charts[i]
            vals = {}
            for a, text in fmap.items():
                if a not in self.fields:
                    raise DanglingReference(f"undeclared field {a!r}", f"{path}/{chart.name}/{a}")
                vals[a] = self.expr(text, self.scope(chart, False), f"{path}/{chart.name}/{a}")
            out[i] = vals
        return out

    # -- sections -----------------------------------------------------------

    def cover(self) -> Cover:
        doc = self.doc
        nerve = [self.simplex(s, f"nerve/{k}") for k, s in enumerate(doc.get("nerve", []))]
        transitions = {}
        for k, t in enumerate(doc.get("transitions", [])):
            path = f"transitions/{k}"
            src, tgt = self.chart(t["from"], f"{path}/from"), self.chart(t["to"], f"{path}/to")
            if src.index > tgt.index:
                raise SchemaError("transitions go from the lower-index chart to the higher one", path)
            if t.get("identity"):
                tr = Transition.identity(src, tgt)
            else:
                bm = t["base_map"]
                if set(bm) != set(tgt.coords):
                    raise DanglingReference(f"base_map must give every coordinate of {tgt.name}", f"{path}/base_map")
                base = {y: self.expr(bm[y], self.scope(src, False), f"{path}/base_map/{y}") for y in tgt.coords}
                inverse = None
                if "inverse" in t:
                    iv = t["inverse"]
                    if set(iv) != set(src.coords):
                        raise DanglingReference(f"inverse must give every coordinate of {src.name}",
                                                f"{path}/inverse")
                    inverse = {x: self.expr(iv[x], self.scope(tgt, False), f"{path}/inverse/{x}")
                               for x in src.coords}
                shifts = {}
                for a, text in t.get("shift", {}).items():
                    if a not in self.fields:
                        raise DanglingReference(f"undeclared field {a!r}", f"{path}/shift/{a}")
                    shifts[a] = self.expr(text, self.scope(src, False), f"{path}/shift/{a}")
                tr = Transition(src, tgt, base, inverse, shifts)
            if tr.pair in transitions:
                raise SchemaError(f"duplicate transition for {list(tr.pair)}", path)
            transitions[tr.pair] = tr
        simplices = set(nerve)
        for pair in transitions:
            if pair not in simplices:
                raise SchemaError(f"transition {list(pair)} is not an edge of the nerve", "transitions")
        try:
            return Cover(self.charts, nerve, transitions)
        except SchemaError as exc:
            raise SchemaError(str(exc), "nerve") from exc

    def densities(self, cover: Cover) -> Cochain:
        vals = {}
        per = self.per_chart(self.doc["densities"], "densities")
        for c in self.charts:
            if c.index not in per:
                raise SchemaError(f"no density for chart {c.name!r}", "densities")
            lag = self.expr(per[c.index], self.scope(c), f"densities/{c.name}")
            vals[(c.index,)] = LocalForm.volume(c, lag)
        return Cochain(cover, 0, 0, self.n, vals)

    def cocycle(self, cover: Cover) -> list[Cochain] | None:
        if "cocycle" not in self.doc:
            return None
        comps = []
        spec = self.doc["cocycle"]
        for key in spec:
            if not 1 <= int(key) <= self.n:
                raise SchemaError(f"cocycle component {key} outside 1..{self.n}", f"cocycle/{key}")
        for q in range(1, self.n + 1):
            vals = {}
            for label, text in spec.get(str(q), {}).items():
                path = f"cocycle/{q}/{label}"
                s = self.simplex(label, path)
                if len(s) != q + 1:
                    raise SchemaError(f"component {q} lives on {q}-simplices, got {label!r}", path)
                if s not in cover:
                    raise DanglingReference(f"{label!r} is not a simplex of the nerve", path)
                chart = self.charts[s[0]]
                try:
                    vals[s] = parse_form(text, chart, (0, self.n - q))
                except UndeclaredIdentifier as exc:
                    raise DanglingReference(str(exc), path) from exc
                except DegreeError as exc:
                    raise SchemaError(str(exc), path) from exc
            comps.append(Cochain(cover, q, 0, self.n - q, vals))
        return comps

    def level(self, cover: Cover) -> dict[tuple, Fraction] | None:
        if "level" not in self.doc:
            return None
        out = {}
        for label, v in self.doc["level"].items():
            s = self.simplex(label, f"level/{label}")
            if len(s) != self.n + 2 or s not in cover:
                raise DanglingReference(f"level key {label!r} is not an {self.n + 1}-simplex", f"level/{label}")
            out[s] = Fraction(v)
        return out

    def cycle(self) -> FundamentalCycle | None:
        spec = self.doc.get("cycle")
        if spec is None:
            return None
        cells = []
        for k, c in enumerate(spec["cells"]):
            path = f"cycle/cells/{k}"
            chart = self.chart(c["chart"], f"{path}/chart").index
            if "interval" in c:
                if self.n != 1:
                    raise SchemaError("interval cells need dimension 1", path)
                a, b = (self.number(v, f"{path}/interval/{m}") for m, v in enumerate(c["interval"]))
                cells.append(Cell(chart, "interval", ((a,), (b,))))
            else:
                kind = "rectangle" if "rectangle" in c else "triangle"
                if self.n != 2:
                    raise SchemaError(f"{kind} cells need dimension 2", path)
                pts = tuple(self.point(p, f"{path}/{kind}/{m}") for m, p in enumerate(c[kind]))
                cells.append(Cell(chart, kind, pts))
        seams = []
        for k, s in enumerate(spec.get("seams", [])):
            path = f"cycle/seams/{k}"
            simplex = self.simplex(s["simplex"], f"{path}/simplex")
            if len(simplex) != 2:
                raise SchemaError("seams live on 1-simplices", path)
            if "point" in s:
                pts = (self.point(s["point"], f"{path}/point"),)
            else:
                pts = tuple(self.point(p, f"{path}/segment/{m}") for m, p in enumerate(s["segment"]))
            seams.append(Stratum(simplex, pts, s["sign"]))
        vertices = []
        for k, s in enumerate(spec.get("vertices", [])):
            path = f"cycle/vertices/{k}"
            simplex = self.simplex(s["simplex"], f"{path}/simplex")
            if len(simplex) != 3:
                raise SchemaError("vertices live on 2-simplices", path)
            vertices.append(Stratum(simplex, (self.point(s["point"], f"{path}/point"),), s["sign"]))
        return FundamentalCycle(cells, seams, vertices)

    def solution(self) -> FieldSolutionSample | None:
        spec = self.doc.get("solution")
        if spec is None:
            return None
        fields = self.field_map(spec["fields"], "solution/fields")
        jacobi = [self.field_map(j, f"solution/jacobi/{k}") for k, j in enumerate(spec.get("jacobi", []))]
        domains = {}
        for i, box in self.per_chart(spec.get("domains", {}), "solution/domains").items():
            domains[i] = [(self.number(lo, "solution/domains"), self.number(hi, "solution/domains")) for lo, hi in box]
        seams = []
        for k, s in enumerate(spec.get("seams", [])):
            path = f"solution/seams/{k}"
            simplex = self.simplex(s["simplex"], f"{path}/simplex")
            seams.append((simplex, [self.point(p, f"{path}/points/{m}") for m, p in enumerate(s["points"])]))
        return FieldSolutionSample(fields, jacobi, domains, seams, spec.get("grid", 21))


def digest(doc: dict) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def validate(doc: Any) -> None:
    validator = jsonschema.Draft202012Validator(problem_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = "/".join(str(p) for p in err.absolute_path) or "(root)"
        raise SchemaError(err.message, path)


def resolve_problem(doc: dict, jet_order: int | None = None) -> Problem:
    """Turn a parsed, schema-valid document into engine objects."""
    validate(doc)
    r = _Resolver(doc, jet_order)
    cover = r.cover()
    densities = r.densities(cover)
    period = r.expr(doc["period"], r.scope(None, False), "period") if "period" in doc else ONE
    if not period or len(period.terms) != 1:
        raise SchemaError("the period must be a nonzero monomial constant", "period")
    if not period.is_constant():
        raise SchemaError("the period must not depend on coordinates", "period")
    return Problem(
        name=doc.get("name", ""),
        n=r.n,
        jet_order=r.jet_order,
        period=period,
        fields=r.fields,
        charts=r.charts,
        cover=cover,
        densities=densities,
        cocycle_components=r.cocycle(cover),
        level=r.level(cover),
        cycle=r.cycle(),
        section=r.field_map(doc["section"], "section") if "section" in doc else None,
        solution=r.solution(),
        digest=digest(doc),
        raw=doc,
    )


def load_problem(path: str | Path, jet_order: int | None = None) -> Problem:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read problem file: {exc.strerror}", str(path)) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})", str(path)) from exc
    return resolve_problem(doc, jet_order)
