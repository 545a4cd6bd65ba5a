"""Symbolic engine for the formal small-amplitude expansion.

Exact-arithmetic expressions over the wave speed V, the quantum
parameter H, half-integer powers of the amplitude parameter, and inert
field-derivative symbols; plus the order-by-order expansion of the
scaled ion-electron system and the mechanical derivation of the model
coefficients.
"""

from .expr import Expr, FieldAtom, canon
from .parser import parse_expr
from .expansion import (
    OrderEquation,
    QkpDerivation,
    SoundSpeed,
    derive_qkp,
    derivation_report,
    expand_orders,
    solve_sound_speed,
)

__all__ = [
    "Expr",
    "FieldAtom",
    "canon",
    "parse_expr",
    "OrderEquation",
    "QkpDerivation",
    "SoundSpeed",
    "derive_qkp",
    "derivation_report",
    "expand_orders",
    "solve_sound_speed",
]
