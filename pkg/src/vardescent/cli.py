"""Command-line front end: load a problem file, dispatch a command, emit a report."""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable

from . import __version__
from .cech import CONVENTIONS, DELIGNE, Cochain, descend, evaluate_action, verify_lagrangian_cocycle
from .errors import SchemaError, VardescentError
from .problem import Problem, load_problem
from .report import Check, VerificationReport, render
from .symexpr import DEFAULT_JET_ORDER
from .theorem_engine import on_shell_check, run_theorem1, sign_audit, universal_current, verify_prop1
from .variational import euler_lagrange, source_decompose

COMMANDS = ("verify", "descend", "euler-lagrange", "theorem1", "current", "action", "on-shell", "sign-audit")


@dataclass(frozen=True)
class Flags:
    jet_order: int | None = None
    quad_order: int = 16
    tol: float = 1e-9
    numeric_tol: float = 1e-8
    ansatz_degree: int = 1
    convention: str = DELIGNE


def _simplex_label(problem: Problem, s: tuple[int, ...]) -> str:
    return ",".join(problem.charts[i].name for i in s)


def _cochain_dict(problem: Problem, c: Cochain) -> dict[str, str]:
    return {_simplex_label(problem, s): str(v) for s, v in sorted(c.values.items()) if v}


def _cocycle(problem: Problem, flags: Flags):
    return problem.lagrangian_cocycle(flags.ansatz_degree)


def _compatibility(problem: Problem) -> VerificationReport:
    rep = VerificationReport("transition compatibility")
    residuals = {k: v for k, v in problem.cover.compatibility_residuals().items() if v}
    shown = "; ".join(f"{k}: {v}" for k, v in residuals.items())
    rep.add(Check("transition_compatibility", not residuals, shown or None,
                  detail="inverse maps, composition of base maps and shifts on triple overlaps"))
    return rep


def _verify(problem: Problem, flags: Flags) -> list[VerificationReport]:
    reports = [_compatibility(problem)]
    omega = _cocycle(problem, flags)
    rep = verify_lagrangian_cocycle(omega, flags.convention)
    rep.results["source"] = "declared cocycle" if problem.has_cocycle else "descent from densities"
    reports.append(rep)
    return reports


def _descend(problem: Problem, flags: Flags) -> list[VerificationReport]:
    omega = descend(problem.densities, problem.period, flags.ansatz_degree)
    rep = verify_lagrangian_cocycle(omega, flags.convention)
    for q in range(1, problem.n + 1):
        rep.results[f"omega^({q})"] = _cochain_dict(problem, omega.omega(q))
    rep.results["level"] = {_simplex_label(problem, s): int(v) for s, v in sorted(omega.resolved_level().items())}
    return [rep]


def _euler_lagrange(problem: Problem, flags: Flags) -> list[VerificationReport]:
    rep = VerificationReport("Euler-Lagrange expressions")
    sources = {}
    for (i,) in problem.cover.simplices(0):
        w = problem.densities.value((i,))
        el = euler_lagrange(w)
        dec = source_decompose(w)
        name = problem.charts[i].name
        rep.expect_zero(f"operator_vs_integration_by_parts[{name}]", el.form - dec.source.form,
                        detail="Euler-Lagrange operator minus the source part of the integration by parts")
        sources[name] = str(el.form)
    rep.results["source_forms"] = sources
    return [rep]


def _theorem1(problem: Problem, flags: Flags):
    omega = _cocycle(problem, flags)
    return omega, run_theorem1(omega, flags.convention, strict=False, extra_degree=flags.ansatz_degree)


def _theorem1_reports(problem: Problem, flags: Flags) -> list[VerificationReport]:
    _, res = _theorem1(problem, flags)
    rep = res.report
    rep.results["source_forms"] = {problem.charts[i].name: str(a.form) for i, a in sorted(res.sources.items())}
    rep.results["cartan"] = {str(q): _cochain_dict(problem, g) for q, g in enumerate(res.cartan.components)}
    return [rep]


def _current(problem: Problem, flags: Flags) -> list[VerificationReport]:
    omega, res = _theorem1(problem, flags)
    cur = universal_current(res.cartan)
    rep = verify_prop1(cur, res.source_cochain(), omega.period, flags.convention)
    rep.results["current"] = {str(q): _cochain_dict(problem, t) for q, t in enumerate(cur.components)}
    return [res.report, rep]


def _action(problem: Problem, flags: Flags) -> list[VerificationReport]:
    if problem.cycle is None or problem.section is None:
        raise SchemaError("the action needs both a 'cycle' and a 'section' in the problem file",
                          "cycle" if problem.cycle is None else "section")
    omega = _cocycle(problem, flags)
    coarse = evaluate_action(omega, problem.cycle, problem.section, flags.quad_order, flags.tol, flags.tol)
    fine = evaluate_action(omega, problem.cycle.refine(), problem.section, flags.quad_order, flags.tol, flags.tol)
    rep = VerificationReport("action")
    change = abs(fine.value - coarse.value)
    rep.add(Check("refinement_invariance", change <= flags.tol, f"{change:.3e}",
                  detail=f"|S(refined cells) - S| <= {flags.tol:g}"))
    rep.results["action"] = coarse.value
    rep.results["action_refined"] = fine.value
    rep.results["quadrature"] = {"order": flags.quad_order, **coarse.diagnostics()}
    return [rep]


def _on_shell(problem: Problem, flags: Flags) -> list[VerificationReport]:
    if problem.solution is None:
        raise SchemaError("on-shell checks need a 'solution' section in the problem file", "solution")
    _, res = _theorem1(problem, flags)
    rep = on_shell_check(problem.cover, res.sources, problem.solution, tol=flags.numeric_tol,
                         seam_tol=flags.tol, jacobi_tol=flags.tol)
    return [res.report, rep]


def _sign_audit(problem: Problem, flags: Flags) -> list[VerificationReport]:
    omega, res = _theorem1(problem, flags)
    return [sign_audit(omega, res)]


_DISPATCH: dict[str, Callable[[Problem, Flags], list[VerificationReport]]] = {
    "verify": _verify,
    "descend": _descend,
    "euler-lagrange": _euler_lagrange,
    "theorem1": _theorem1_reports,
    "current": _current,
    "action": _action,
    "on-shell": _on_shell,
    "sign-audit": _sign_audit,
}


def _error_entry(exc: VardescentError) -> dict:
    out = {"type": type(exc).__name__, "message": str(exc)}
    for attr in ("residual", "step", "simplex", "location", "defects", "path", "position"):
        v = getattr(exc, attr, None)
        if v is None:
            continue
        if attr == "defects":
            v = {",".join(map(str, s)): render(d) for s, d in v.items()}
        elif attr == "simplex":
            v = list(v)
        elif attr == "location":
            v = render(v)
        elif not isinstance(v, (int, str)):
            v = render(v)
        out[attr] = v
    return out


def run(command: str, problem: Problem, flags: Flags = Flags()) -> tuple[dict, int]:
    """Run one command and return ``(report document, exit code)``.

    Module errors become report entries: exit 1 for failed checks, 2 for bad
    input and 3 when a solver finds no primitive in its ansatz.
    """
    if command not in _DISPATCH:
        raise ValueError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")
    if flags.convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {flags.convention!r}")
    start = time.perf_counter()
    error = None
    try:
        reports = _DISPATCH[command](problem, flags)
        code = 0 if all(r.passed for r in reports) else 1
    except VardescentError as exc:
        partial = getattr(exc, "report", None)
        reports = [partial] if partial is not None else []
        error = _error_entry(exc)
        code = exc.exit_code
    doc = {
        "tool": "vardescent",
        "version": __version__,
        "command": command,
        "problem": {"name": problem.name, "digest": problem.digest, "dimension": problem.n,
                    "jet_order": problem.jet_order},
        "flags": {k: v for k, v in asdict(flags).items()},
        "status": "pass" if code == 0 else "fail",
        "exit_code": code,
        "reports": [r.to_dict() for r in reports],
        "error": error,
        "timing": {"seconds": round(time.perf_counter() - start, 6)},
    }
    doc["flags"]["jet_order"] = problem.jet_order
    return doc, code


def render_text(doc: dict) -> str:
    lines = [f"vardescent {doc['command']} on {doc['problem']['name'] or '(unnamed)'} "
             f"[{doc['problem']['digest'][:12]}]: {doc['status'].upper()} (exit {doc['exit_code']})"]
    for rep in doc["reports"]:
        lines.append(f"{rep['title']}: {rep['status'].upper()}")
        for c in rep["checks"]:
            status = "info" if c.get("informational") else c["status"]
            sign = f" [s={c['sign']:+d}]" if "sign" in c else ""
            lines.append(f"  [{status}] {c['name']}{sign}: residual {c['residual']}")
            if c.get("detail"):
                lines.append(f"         {c['detail']}")
        for k, v in rep["results"].items():
            if isinstance(v, dict):
                lines.append(f"  {k}:")
                lines.extend(f"    {kk}: {json.dumps(vv) if isinstance(vv, (dict, list)) else vv}"
                             for kk, vv in v.items())
            else:
                lines.append(f"  {k} = {v!r}" if isinstance(v, float) else f"  {k} = {v}")
        for note in rep["notes"]:
            lines.append(f"  note: {note}")
    if doc["error"]:
        err = doc["error"]
        lines.append(f"error: {err['type']}: {err['message']}")
    lines.append(f"time: {doc['timing']['seconds']:.3f} s")
    return "\n".join(lines)


def render_machine(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vardescent",
                                description="Verify, construct and vary multivalued Lagrangian cocycles.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("problem", type=Path, help="problem file (JSON)")
    p.add_argument("--jet-order", type=int, default=None,
                   help=f"jet-order cap K (default: the file's value, else {DEFAULT_JET_ORDER})")
    p.add_argument("--quad-order", type=int, default=16, help="Gauss-Legendre nodes per cell (default 16)")
    p.add_argument("--tol", type=float, default=1e-9, help="quadrature and seam tolerance (default 1e-9)")
    p.add_argument("--numeric-tol", type=float, default=1e-8,
                   help="tolerance on field-equation residuals (default 1e-8)")
    p.add_argument("--ansatz-degree", type=int, default=1,
                   help="extra polynomial degree for primitive searches (default 1)")
    p.add_argument("--convention", choices=CONVENTIONS, default=DELIGNE)
    p.add_argument("--report", type=Path, default=None, help="also write the report to this file")
    p.add_argument("--format", choices=("text", "machine"), default="text")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.jet_order is not None and args.jet_order < 1:
        print("error: --jet-order must be positive", file=sys.stderr)
        return 2
    try:
        problem = load_problem(args.problem, args.jet_order)
    except VardescentError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    flags = Flags(args.jet_order, args.quad_order, args.tol, args.numeric_tol, args.ansatz_degree, args.convention)
    doc, code = run(args.command, problem, flags)
    text = render_machine(doc) if args.format == "machine" else render_text(doc) + "\n"
    sys.stdout.write(text)
    if args.report is not None:
        args.report.write_text(text, encoding="utf-8")
    return code


if __name__ == "__main__":
    sys.exit(main())
