"""Floating-point evaluation of normal forms."""

from __future__ import annotations

import math
from typing import Any, Callable, Mapping

import numpy as np

from ..errors import UnassignedSymbol
from .core import FUNCTIONS, PI, Atom, Func, JetExpr


def _normalize_env(assignment: Mapping[Any, Any]) -> dict:
    env: dict = {}
    for k, v in assignment.items():
        env[str(k) if isinstance(k, Atom) else k] = v
    env.setdefault(str(PI), math.pi)
    return env


def compile_numeric(e: JetExpr) -> Callable[[Mapping[Any, Any]], Any]:
    """Return ``f(env)`` evaluating ``e``; values may be floats or numpy arrays.

    ``env`` maps atoms (or their printed names, e.g. ``"u_t"``) to values;
    ``pi`` defaults to its floating value.
    """
    terms = []
    for mono, c in e.terms:
        factors = []
        for a, k in mono:
            if isinstance(a, Func):
                spec = FUNCTIONS[a.name]
                if spec.numeric is None:
                    raise UnassignedSymbol(f"function {a.name!r} has no numeric implementation")
                factors.append((("func", spec.numeric, compile_numeric(a.arg)), k))
            else:
                factors.append((("atom", str(a)), k))
        terms.append((float(c), factors))

    def evaluate(assignment: Mapping[Any, Any]):
        env = assignment if getattr(assignment, "_normalized", False) else _normalize_env(assignment)
        total = 0.0
        for c, factors in terms:
            val = c
            for f, k in factors:
                if f[0] == "atom":
                    try:
                        x = env[f[1]]
                    except KeyError:
                        raise UnassignedSymbol(f"no value assigned to {f[1]!r}") from None
                else:
                    x = f[1](f[2](env))
                val = val * (x ** k if k != 1 else x)
            total = total + val
        return total

    return evaluate


class Env(dict):
    """Pre-normalized evaluation environment (string keys)."""

    _normalized = True

    def __init__(self, assignment: Mapping[Any, Any] = ()):
        super().__init__(_normalize_env(dict(assignment)))


def eval_numeric(e: JetExpr, assignment: Mapping[Any, Any]) -> float:
    """IEEE double value of ``e`` under ``assignment``."""
    val = compile_numeric(e)(assignment)
    return float(val) if np.ndim(val) == 0 else val
