"""Exact symbolic scalar kernel over jet coordinates."""

from .core import (
    DEFAULT_JET_ORDER,
    FUNCTIONS,
    ONE,
    PI,
    ZERO,
    Atom,
    Const,
    Coord,
    Func,
    Jet,
    JetExpr,
    const,
    coord,
    format_expr,
    func,
    jet,
    mono_sort_key,
    partial,
    pi,
    reciprocal,
    register_function,
    register_rewrite,
    total_derivative,
    total_derivative_multi,
)
from .numeric import Env, compile_numeric, eval_numeric
from .parser import Scope, parse_expr
from .prolong import Prolongation, identity_map, inverse_jacobian, substitute_prolonged

__all__ = [
    "DEFAULT_JET_ORDER", "FUNCTIONS", "ONE", "PI", "ZERO", "Atom", "Const", "Coord", "Env", "Func", "Jet",
    "JetExpr", "Prolongation", "Scope", "compile_numeric", "const", "coord", "eval_numeric", "format_expr", "func",
    "identity_map", "inverse_jacobian", "jet", "mono_sort_key", "parse_expr", "partial", "pi", "reciprocal",
    "register_function", "register_rewrite", "substitute_prolonged", "total_derivative",
    "total_derivative_multi",
]
