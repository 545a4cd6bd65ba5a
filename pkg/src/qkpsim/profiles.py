"""First-order profiles and well-prepared initial data.

Given the leading profile n^(1), the remaining first-order fields follow
from the leading-order relations: the electron profile equals n^(1), the
longitudinal velocity is V n^(1), and the transverse velocity is the
zero-mean x1-antiderivative of V d/dx2 n^(1).  Well-prepared initial
data for the ion-electron solver places these profiles at their
expansion weights and closes (n_e, phi) with the exact constraint solve
instead of the series truncation, so the state starts with no spurious
constraint violation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParam, NonZeroMean
from .qep import QepParams, QepState, solve_electron
from .spectral import (
    RealField2D,
    TOL_MEAN,
    antideriv_x1,
    deriv,
    require_same_grid,
    x1_line_means,
)


@dataclass(frozen=True)
class ProfileSet1:
    """First-order profiles (n^(1), n_e^(1), u_i1^(1), u_i2^(1))."""

    n1: RealField2D
    ne1: RealField2D
    ui1_1: RealField2D
    ui2_1: RealField2D

    def __post_init__(self):
        require_same_grid(self.n1, self.ne1, self.ui1_1, self.ui2_1)


def build_profiles(n1: RealField2D, V: float) -> ProfileSet1:
    """Profiles slaved to n^(1); requires zero x1-line means on n1.

    The transverse profile is fixed to the zero-x1-mean representative of
    the antiderivative (the additive constant is not determined by the
    defining relation).
    """
    worst = float(np.max(np.abs(x1_line_means(n1))))
    if worst > TOL_MEAN:
        raise NonZeroMean(
            f"profile n1 must have zero x1-line means (found {worst:.3e})"
        )
    ui2 = antideriv_x1(deriv(n1, 0, 1)) * V
    return ProfileSet1(
        n1=n1,
        ne1=n1.copy(),
        ui1_1=n1 * V,
        ui2_1=ui2,
    )


def build_wellprepared(n1: RealField2D, p: QepParams) -> QepState:
    """Ion-electron state at t = 0 built from the first-order profiles.

    n_i = 1 + eps n^(1), u_i1 = eps V n^(1), u_i2 = eps^(3/2) u_i2^(1);
    (n_e, phi) solve the constraint exactly at that ion density.
    """
    profiles = build_profiles(n1, p.V)
    grid = n1.grid
    n_i = profiles.n1 * p.eps + 1.0
    u_i1 = profiles.ui1_1 * p.eps
    u_i2 = profiles.ui2_1 * (p.eps ** 1.5)
    guess = RealField2D(grid, np.maximum(n_i.values, 0.5))
    n_e, phi = solve_electron(n_i, p, guess)
    return QepState(t=0.0, n_i=n_i, u_i1=u_i1, u_i2=u_i2, n_e=n_e, phi=phi)


def lab_horizon(tau: float, eps: float) -> float:
    """Unscaled-time meaning of integrating the scaled system to tau."""
    if not 0.0 < eps < 1.0:
        raise InvalidParam(f"eps must lie in (0, 1), got {eps}")
    if tau < 0.0:
        raise InvalidParam(f"tau must be non-negative, got {tau}")
    return eps ** -1.5 * tau
