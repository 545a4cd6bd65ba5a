"""Anisotropic weighted norms for the convergence criterion.

The triple norm sums eps^(alpha + 2 beta) weighted squared seminorms
|| d^alpha/dx1 d^beta/dx2 f ||_L2^2 with direction-dependent maximal
orders: alpha + beta <= 3 for the ion remainder, <= 4 for both velocity
remainders, <= 7 for the electron remainder.  All seminorms are
evaluated spectrally (Parseval) in the continuum normalization; stencil
differentiation at order seven would drown the small weights.
"""

from __future__ import annotations

from dataclasses import dataclass

from .spectral import RealField2D, require_same_grid, seminorm_sq
from .errors import InvalidParam

#: maximal derivative orders per remainder field
FIELD_ORDERS = {"N_i": 3, "U1": 4, "U2": 4, "N_e": 7}


@dataclass(frozen=True)
class TripleNormReport:
    """Per-(field, alpha, beta) weighted contributions and their total.

    ``contributions`` maps (field, alpha, beta) to the weighted squared
    seminorm; ``seminorms_sq`` holds the unweighted values; ``total`` is
    the exact sum of the stored contributions.
    """

    eps: float
    contributions: dict
    seminorms_sq: dict
    total: float


def triple_norm(N_i: RealField2D, N_e: RealField2D, U1: RealField2D,
                U2: RealField2D, eps: float) -> TripleNormReport:
    """Evaluate the weighted anisotropic norm of the four remainders."""
    if eps <= 0:
        raise InvalidParam(f"eps must be positive, got {eps}")
    require_same_grid(N_i, N_e, U1, U2)
    fields = {"N_i": N_i, "N_e": N_e, "U1": U1, "U2": U2}
    contributions = {}
    seminorms = {}
    for name, field in fields.items():
        max_order = FIELD_ORDERS[name]
        for alpha in range(max_order + 1):
            for beta in range(max_order + 1 - alpha):
                raw = seminorm_sq(field, alpha, beta)
                seminorms[(name, alpha, beta)] = raw
                contributions[(name, alpha, beta)] = eps ** (alpha + 2 * beta) * raw
    total = sum(contributions.values())
    return TripleNormReport(
        eps=eps, contributions=contributions, seminorms_sq=seminorms, total=total
    )


def h1_error(f: RealField2D, g: RealField2D) -> float:
    """H1 distance between two fields on one grid."""
    require_same_grid(f, g)
    diff = f - g
    total = (
        seminorm_sq(diff, 0, 0)
        + seminorm_sq(diff, 1, 0)
        + seminorm_sq(diff, 0, 1)
    )
    return total ** 0.5


def h1_norm(f: RealField2D) -> float:
    total = seminorm_sq(f, 0, 0) + seminorm_sq(f, 1, 0) + seminorm_sq(f, 0, 1)
    return total ** 0.5
