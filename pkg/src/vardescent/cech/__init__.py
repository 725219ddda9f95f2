"""Covers, Cech cochains, the Deligne total complex and the action pairing."""

from .action import ActionResult, Cell, FundamentalCycle, Stratum, evaluate_action
from .cochain import Cochain, cech_coboundary
from .cocycle import LagrangianCocycle, descend, verify_lagrangian_cocycle
from .cover import Cover, Transition, close_nerve, faces
from .total import CECH, CONVENTIONS, DELIGNE, DeligneDegree, TotalElement, total_D, total_Delta

__all__ = [
    "ActionResult", "CECH", "CONVENTIONS", "Cell", "Cochain", "Cover", "DELIGNE", "DeligneDegree",
    "FundamentalCycle", "LagrangianCocycle", "Stratum", "TotalElement", "Transition", "cech_coboundary",
    "close_nerve", "descend", "evaluate_action", "faces", "total_D", "total_Delta",
    "verify_lagrangian_cocycle",
]
