"""Named checks with symbolic residuals."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


def is_zero(residual: Any) -> bool:
    if residual is None:
        return True
    if hasattr(residual, "is_zero"):
        return residual.is_zero()
    if isinstance(residual, (int, float)):
        return residual == 0
    return not residual


def render(residual: Any) -> str:
    if residual is None:
        return "0"
    return str(residual)


@dataclass
class Check:
    name: str
    passed: bool
    residual: Any = None
    detail: str = ""
    sign: int | None = None
    informational: bool = False

    def to_dict(self) -> dict:
        out = {"name": self.name, "status": "pass" if self.passed else "fail",
               "residual": render(self.residual)}
        if self.detail:
            out["detail"] = self.detail
        if self.sign is not None:
            out["sign"] = self.sign
        if self.informational:
            out["informational"] = True
        return out


@dataclass
class VerificationReport:
    title: str
    checks: list[Check] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    results: dict[str, Any] = field(default_factory=dict)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def expect_zero(self, name: str, residual: Any, detail: str = "", sign: int | None = None,
                    informational: bool = False) -> Check:
        return self.add(Check(name, is_zero(residual), residual, detail, sign, informational))

    def fail(self, name: str, residual: Any = None, detail: str = "") -> Check:
        return self.add(Check(name, False, residual, detail))

    def note(self, text: str) -> None:
        self.notes.append(text)

    def extend(self, other: "VerificationReport", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.passed, c.residual, c.detail, c.sign, c.informational))
        self.notes.extend(other.notes)
        for k, v in other.results.items():
            self.results.setdefault(k, v)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.informational)

    def get(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed and not c.informational]

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "status": "pass" if self.passed else "fail",
            "checks": [c.to_dict() for c in self.checks],
            "notes": list(self.notes),
            "results": {k: render(v) if not isinstance(v, (int, float, str, list, dict)) else v
                        for k, v in self.results.items()},
        }

    def __str__(self):
        lines = [f"{self.title}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            status = "info" if c.informational else ("pass" if c.passed else "FAIL")
            sign = f" [s={c.sign:+d}]" if c.sign is not None else ""
            lines.append(f"  [{status}] {c.name}{sign}: residual {render(c.residual)}")
            if c.detail:
                lines.append(f"         {c.detail}")
        for k, v in self.results.items():
            lines.append(f"  {k} = {render(v)}")
        for n in self.notes:
            lines.append(f"  note: {n}")
        return "\n".join(lines)
