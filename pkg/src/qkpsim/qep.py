"""Solver for the scaled 2D ion-electron system.

The ion unknowns (n_i, u_i1, u_i2) evolve hyperbolically in the moving
frame; the electron density n_e and the potential phi are slaved to n_i
through the quasi-neutrality constraint

    F(n_e) = eps d^2/dx1^2 phi + eps^2 d^2/dx2^2 phi - n_e + n_i = 0,

with the potential relation

    phi = -1/2 + n_e^2/2
          - (H^2 / (2 sqrt(n_e))) (eps d^2/dx1^2 + eps^2 d^2/dx2^2) sqrt(n_e).

Evolution right-hand sides (dealiased products, amplitude parameter eps):

    dt n_i  = (1/eps) [ V dx1 n_i - dx1(n_i u_i1) - eps^(1/2) dx2(n_i u_i2) ]
    dt u_i1 = (1/eps) [ V dx1 u_i1 - u_i1 dx1 u_i1 - eps^(1/2) u_i2 dx2 u_i1
                        - dx1 phi ]
    dt u_i2 = (1/eps) [ V dx1 u_i2 - u_i1 dx1 u_i2 - eps^(1/2) u_i2 dx2 u_i2
                        - eps^(1/2) dx2 phi ]

Time stepping is classical RK4 with the elliptic constraint re-solved at
every stage (warm-started); the Newton linear solves are preconditioned
by the Fourier-diagonal linearization about equilibrium.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import (
    Blowup,
    InvalidParam,
    NonPositiveDensity,
    StepRejected,
    WindowExitWarning,
)
from .spectral import (
    Grid2D,
    RealField2D,
    dealias,
    deriv,
    inverse,
    newton_solve,
    require_same_grid,
    spectrum,
)

OVERFLOW_GUARD = 1e12

#: a-priori monitoring window for both densities
WINDOW = (0.5, 1.5)

#: elliptic residual target per grid point (discrete l2)
ELLIPTIC_TOL_PER_POINT = 1e-12


@dataclass(frozen=True)
class QepParams:
    """Amplitude parameter, frame speed and quantum parameter."""

    eps: float
    V: float
    H: float
    newton_tol_per_point: float = ELLIPTIC_TOL_PER_POINT

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise InvalidParam(f"eps must lie in (0, 1), got {self.eps}")
        if self.H <= 0.0:
            raise InvalidParam(f"H must be positive, got {self.H}")

    def elliptic_tol(self, grid: Grid2D) -> float:
        return self.newton_tol_per_point * np.sqrt(grid.npoints)


@dataclass(frozen=True)
class QepState:
    """Full ion-electron state; (n_e, phi) cached from the elliptic solve."""

    t: float
    n_i: RealField2D
    u_i1: RealField2D
    u_i2: RealField2D
    n_e: RealField2D
    phi: RealField2D
    window_exit: bool = dataclass_field(default=False, compare=False)

    def __post_init__(self):
        require_same_grid(self.n_i, self.u_i1, self.u_i2, self.n_e, self.phi)

    @property
    def grid(self) -> Grid2D:
        return self.n_i.grid


def scaled_laplacian(f: RealField2D, eps: float) -> RealField2D:
    """eps d^2/dx1^2 + eps^2 d^2/dx2^2 of f."""
    return deriv(f, 2, 0) * eps + deriv(f, 0, 2) * (eps * eps)


def bohm_potential(n_e: RealField2D, eps: float, H: float) -> RealField2D:
    """Potential from the electron closure, quantum correction included."""
    if np.min(n_e.values) <= 0.0:
        raise NonPositiveDensity(
            f"electron density reaches {np.min(n_e.values):.3e}"
        )
    root = RealField2D(n_e.grid, np.sqrt(n_e.values))
    quantum = scaled_laplacian(root, eps) / root * (0.5 * H * H)
    return n_e * n_e * 0.5 - 0.5 - quantum


def constraint_residual(n_e: RealField2D, n_i: RealField2D, p: QepParams) -> RealField2D:
    """F(n_e) whose root slaves the electron density to the ion density."""
    phi = bohm_potential(n_e, p.eps, p.H)
    return scaled_laplacian(phi, p.eps) - n_e + n_i


def _constraint_jacobian_apply(n_e: RealField2D, v: RealField2D, p: QepParams) -> RealField2D:
    """Directional derivative of the constraint residual at n_e."""
    grid = n_e.grid
    w = np.sqrt(n_e.values)
    root = RealField2D(grid, w)
    lap_w = scaled_laplacian(root, p.eps)
    dw = RealField2D(grid, v.values / (2.0 * w))
    # d(bohm) = n_e v - (H^2/2) [ lap(dw)/w - (lap w) dw / w^2 ]
    h2 = 0.5 * p.H * p.H
    dbohm = (
        n_e * v
        - (scaled_laplacian(dw, p.eps) / root) * h2
        + (lap_w * dw / (root * root)) * h2
    )
    return scaled_laplacian(dbohm, p.eps) - v


def _equilibrium_preconditioner(grid: Grid2D, p: QepParams):
    """Inverse of the constraint Jacobian linearized about n_e = 1.

    In Fourier space the linearization is -(1 + kappa + (H^2/4) kappa^2)
    with kappa = eps k1^2 + eps^2 k2^2, a diagonal operator.
    """
    kappa = p.eps * grid.k1[:, None] ** 2 + p.eps**2 * grid.k2[None, :] ** 2
    denom = -(1.0 + kappa + (p.H**2 / 4.0) * kappa**2)

    def apply(_x: RealField2D, r: RealField2D) -> RealField2D:
        return inverse(grid, spectrum(r) / denom)

    return apply


def solve_electron(n_i: RealField2D, p: QepParams, guess: RealField2D):
    """Newton solution of the electron constraint; returns (n_e, phi).

    Warm-start through ``guess``.  Raises :class:`NonPositiveDensity` when
    the input ion density is not positive or when backtracking cannot keep
    the electron density positive, and :class:`NoConvergence` on a stalled
    iteration.
    """
    if np.min(n_i.values) <= 0.0:
        raise NonPositiveDensity(
            f"ion density reaches {np.min(n_i.values):.3e}"
        )
    if np.min(guess.values) <= 0.0:
        raise NonPositiveDensity("initial guess must be positive")
    grid = require_same_grid(n_i, guess)

    def residual(x):
        return constraint_residual(x, n_i, p)

    def jac(x, v):
        return _constraint_jacobian_apply(x, v, p)

    def positive(x):
        return np.min(x.values) > 0.0

    try:
        n_e = newton_solve(
            residual,
            jac,
            guess,
            tol=p.elliptic_tol(grid),
            max_iter=30,
            precondition=_equilibrium_preconditioner(grid, p),
            guard=positive,
        )
    except StepRejected as err:
        raise NonPositiveDensity(
            f"electron density left the positive cone: {err}"
        ) from err
    return n_e, bohm_potential(n_e, p.eps, p.H)


def qep_rhs(s: QepState, p: QepParams):
    """Evolution right-hand sides (dn_i, du_i1, du_i2), dealiased."""
    inv_eps = 1.0 / p.eps
    seps = np.sqrt(p.eps)
    n_i, u1, u2, phi = s.n_i, s.u_i1, s.u_i2, s.phi
    dn = (
        deriv(n_i, 1, 0) * p.V
        - deriv(dealias(n_i * u1), 1, 0)
        - deriv(dealias(n_i * u2), 0, 1) * seps
    ) * inv_eps
    du1 = (
        deriv(u1, 1, 0) * p.V
        - dealias(u1 * deriv(u1, 1, 0))
        - dealias(u2 * deriv(u1, 0, 1)) * seps
        - deriv(phi, 1, 0)
    ) * inv_eps
    du2 = (
        deriv(u2, 1, 0) * p.V
        - dealias(u1 * deriv(u2, 1, 0))
        - dealias(u2 * deriv(u2, 0, 1)) * seps
        - deriv(phi, 0, 1) * seps
    ) * inv_eps
    return dn, du1, du2


def _stage_rhs(n_i, u1, u2, n_e_guess, p, t):
    """Elliptic solve + rhs evaluation for one RK stage."""
    n_e, phi = solve_electron(n_i, p, n_e_guess)
    state = QepState(t=t, n_i=n_i, u_i1=u1, u_i2=u2, n_e=n_e, phi=phi)
    return qep_rhs(state, p), n_e, phi


def qep_step(s: QepState, p: QepParams, dt: float) -> QepState:
    """Classical RK4 step; the constraint is re-solved at every stage.

    The accepted state carries the elliptic solution at the new ion
    density, so its constraint residual meets the solver tolerance.
    Raises :class:`Blowup` past the overflow guard; density excursions
    outside the (1/2, 3/2) window raise :class:`WindowExitWarning` (a
    warning only) and mark the returned state.
    """
    if dt <= 0:
        raise InvalidParam("dt must be positive")
    n, u1, u2 = s.n_i, s.u_i1, s.u_i2
    ne_warm = s.n_e

    (k1n, k1u, k1v), ne_warm, _ = _stage_rhs(n, u1, u2, ne_warm, p, s.t)
    half = 0.5 * dt
    (k2n, k2u, k2v), ne_warm, _ = _stage_rhs(
        n + k1n * half, u1 + k1u * half, u2 + k1v * half, ne_warm, p, s.t + half
    )
    (k3n, k3u, k3v), ne_warm, _ = _stage_rhs(
        n + k2n * half, u1 + k2u * half, u2 + k2v * half, ne_warm, p, s.t + half
    )
    (k4n, k4u, k4v), ne_warm, _ = _stage_rhs(
        n + k3n * dt, u1 + k3u * dt, u2 + k3v * dt, ne_warm, p, s.t + dt
    )

    w = dt / 6.0
    n_new = n + (k1n + k2n * 2.0 + k3n * 2.0 + k4n) * w
    u1_new = u1 + (k1u + k2u * 2.0 + k3u * 2.0 + k4u) * w
    u2_new = u2 + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * w
    t_new = s.t + dt

    for f in (n_new, u1_new, u2_new):
        if not np.all(np.isfinite(f.values)) or f.max_abs() > OVERFLOW_GUARD:
            raise Blowup(
                f"solution exceeded the overflow guard at t = {t_new:.6g}",
                time=t_new,
            )
    n_e_new, phi_new = solve_electron(n_new, p, ne_warm)

    window_exit = bool(
        np.min(n_new.values) <= WINDOW[0]
        or np.max(n_new.values) >= WINDOW[1]
        or np.min(n_e_new.values) <= WINDOW[0]
        or np.max(n_e_new.values) >= WINDOW[1]
    )
    if window_exit:
        warnings.warn(
            f"density left the window {WINDOW} at t = {t_new:.6g}",
            WindowExitWarning,
            stacklevel=2,
        )
    return QepState(
        t=t_new,
        n_i=n_new,
        u_i1=u1_new,
        u_i2=u2_new,
        n_e=n_e_new,
        phi=phi_new,
        window_exit=window_exit,
    )


def suggest_dt_qep(s: QepState, p: QepParams, cfl: float) -> float:
    """Advective limit over both directions, plus the quantum stiffness cap.

    dt = cfl / (lam (k1max + eps^(1/2) k2max)) with lam the fastest scaled
    characteristic speed (|V| + |u|_inf + sound-speed estimate)/eps, capped
    by cfl eps / (1 + (H/2) eps k1max^2) for the dispersive potential.
    """
    if not 0.0 < cfl <= 1.0:
        raise InvalidParam(f"cfl must be in (0, 1], got {cfl}")
    grid = s.grid
    u_inf = max(s.u_i1.max_abs(), s.u_i2.max_abs())
    sound = float(np.sqrt(np.max(s.n_e.values)))
    lam = (abs(p.V) + u_inf + sound) / p.eps
    advective = cfl / (lam * (grid.k1max + np.sqrt(p.eps) * grid.k2max))
    quantum_cap = cfl * p.eps / (1.0 + 0.5 * p.H * p.eps * grid.k1max**2)
    return min(advective, quantum_cap)


def acoustic_dispersion(p: QepParams, k1: float, k2: float, branch: int = +1) -> float:
    """Scaled-time frequency of the linearized system at wavevector (k1, k2).

    Fourier analysis about the equilibrium gives, with P = k1^2 + eps k2^2
    and kappa = eps P,

        Omega^2 = P (1 + (H^2/4) kappa) / (1 + kappa + (H^2/4) kappa^2),

    and the mode frequency in the moving frame is
    omega = (branch * Omega - V k1) / eps.
    """
    if branch not in (+1, -1):
        raise InvalidParam("branch must be +1 or -1")
    P = k1**2 + p.eps * k2**2
    kappa = p.eps * P
    g = 1.0 + (p.H**2 / 4.0) * kappa
    d = 1.0 + kappa * g
    omega_lab = np.sqrt(P * g / d)
    return (branch * omega_lab - p.V * k1) / p.eps


def linear_eigenmode(grid: Grid2D, p: QepParams, m1: int, m2: int,
                     delta: float, branch: int = +1) -> QepState:
    """Small-amplitude eigenmode of the linearized system as a QepState.

    The ion fields follow the analytic eigenvector at electron amplitude
    ``delta``; (n_e, phi) come from the exact constraint solve, so the
    state is an eigenvector up to O(delta^2).
    """
    k1 = 2 * np.pi * m1 / grid.l1
    k2 = 2 * np.pi * m2 / grid.l2
    P = k1**2 + p.eps * k2**2
    kappa = p.eps * P
    g = 1.0 + (p.H**2 / 4.0) * kappa
    d = 1.0 + kappa * g
    omega_lab = branch * np.sqrt(P * g / d)
    xx1, xx2 = grid.meshgrid()
    phase = np.cos(k1 * xx1 + k2 * xx2)
    n_i = RealField2D(grid, 1.0 + d * delta * phase)
    u1 = RealField2D(grid, (k1 * g / omega_lab) * delta * phase)
    u2 = RealField2D(grid, (np.sqrt(p.eps) * k2 * g / omega_lab) * delta * phase)
    n_e, phi = solve_electron(n_i, p, RealField2D.full(grid, 1.0))
    return QepState(t=0.0, n_i=n_i, u_i1=u1, u_i2=u2, n_e=n_e, phi=phi)


def equilibrium_state(grid: Grid2D, p: QepParams) -> QepState:
    """The exact fixed point (n_i, n_e, u) = (1, 1, 0), phi = 0."""
    ones = RealField2D.full(grid, 1.0)
    zeros = RealField2D.zeros(grid)
    return QepState(t=0.0, n_i=ones, u_i1=zeros.copy(), u_i2=zeros.copy(),
                    n_e=ones.copy(), phi=zeros.copy())


def elliptic_residual_norm(s: QepState, p: QepParams) -> float:
    """Discrete l2 norm of the cached constraint residual."""
    r = constraint_residual(s.n_e, s.n_i, p)
    return float(np.linalg.norm(r.values.ravel()))


def advance_to(s: QepState, p: QepParams, t_end: float, dt: float) -> QepState:
    """Step with fixed dt until t_end; dt must divide the interval."""
    span = t_end - s.t
    nsteps = int(round(span / dt))
    if nsteps < 0 or abs(nsteps * dt - span) > 1e-9 * max(1.0, abs(t_end)):
        raise InvalidParam(f"dt {dt} does not divide the interval {span}")
    out = s
    for _ in range(nsteps):
        out = qep_step(out, p, dt)
    return out
