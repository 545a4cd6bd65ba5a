"""Periodic-grid Fourier infrastructure.

Real-to-half-complex transforms on a rectangular torus, spectral
differentiation and x1-antidifferentiation, 2/3-rule dealiasing, and a
matrix-free Newton solver for the nonlinear elliptic constraints.

Conventions
-----------
Fields are sampled on a uniform (n1, n2) grid with axis 0 along x1 and
axis 1 along x2.  Spectral arrays follow ``numpy.fft.rfft2``: the full
wavenumber table along x1 and the non-negative half along x2.  Odd-order
derivatives annihilate the Nyquist plane of the corresponding axis (the
standard convention for real data on an even grid), so band-limited
fields are differentiated exactly.

All functions are pure over value-semantic fields; no global mutable
state is kept, so concurrent use from several threads is safe as long as
each thread works on its own arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import GridMismatch, InvalidParam, NoConvergence, NonZeroMean, StepRejected

#: Absolute tolerance on x1-line means below which a field counts as mean-free.
TOL_MEAN = 1e-10


@dataclass(frozen=True)
class Grid2D:
    """Periodic rectangular grid with pre-computed wavenumber tables.

    Parameters
    ----------
    n1, n2 : int
        Sample counts along x1 and x2; both must be even and >= 4 so the
        real transforms have a well-defined Hermitian symmetry.
    l1, l2 : float
        Periods along x1 and x2, both > 0.
    """

    n1: int
    n2: int
    l1: float
    l2: float

    def __post_init__(self):
        for name, n in (("n1", self.n1), ("n2", self.n2)):
            if n < 4 or n % 2 != 0:
                raise InvalidParam(f"{name} must be an even integer >= 4, got {n}")
        if self.l1 <= 0 or self.l2 <= 0:
            raise InvalidParam(f"periods must be positive, got l1={self.l1}, l2={self.l2}")

    @cached_property
    def x1(self) -> np.ndarray:
        return np.arange(self.n1) * (self.l1 / self.n1)

    @cached_property
    def x2(self) -> np.ndarray:
        return np.arange(self.n2) * (self.l2 / self.n2)

    @cached_property
    def k1(self) -> np.ndarray:
        """Wavenumbers along x1, full FFT order; k1[0] = 0."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n1, d=self.l1 / self.n1)

    @cached_property
    def k2(self) -> np.ndarray:
        """Non-negative wavenumbers along x2 (half spectrum); k2[0] = 0."""
        return 2.0 * np.pi * np.fft.rfftfreq(self.n2, d=self.l2 / self.n2)

    @cached_property
    def k1max(self) -> float:
        return np.pi * self.n1 / self.l1

    @cached_property
    def k2max(self) -> float:
        return np.pi * self.n2 / self.l2

    @cached_property
    def npoints(self) -> int:
        return self.n1 * self.n2

    @cached_property
    def cell_area(self) -> float:
        return (self.l1 / self.n1) * (self.l2 / self.n2)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Boolean spectral mask of the 2/3 rule (True = mode retained)."""
        keep1 = np.abs(self.k1) <= (2.0 / 3.0) * self.k1max
        keep2 = self.k2 <= (2.0 / 3.0) * self.k2max
        return keep1[:, None] & keep2[None, :]

    @cached_property
    def parseval_weights(self) -> np.ndarray:
        """Multiplicity of each half-spectrum column in the full spectrum."""
        w = np.full(self.n2 // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0  # Nyquist column, present once for even n2
        return w

    def meshgrid(self):
        return np.meshgrid(self.x1, self.x2, indexing="ij")

    def spectral_multiplier(self, a: int, b: int) -> np.ndarray:
        """Fourier multiplier of d^a/dx1^a d^b/dx2^b with Nyquist zeroing on odd orders."""
        k1 = self.k1.copy()
        k2 = self.k2.copy()
        if a % 2 == 1:
            k1[self.n1 // 2] = 0.0
        if b % 2 == 1:
            k2[-1] = 0.0
        m1 = (1j * k1) ** a if a > 0 else np.ones_like(k1, dtype=complex)
        m2 = (1j * k2) ** b if b > 0 else np.ones_like(k2, dtype=complex)
        return m1[:, None] * m2[None, :]


class RealField2D:
    """One real scalar unknown sampled on a :class:`Grid2D`.

    Supports elementwise arithmetic with fields on the same grid and with
    scalars.  Construction rejects non-finite samples.

    Fields are value-semantic: treat ``values`` as immutable once the field
    is built.  The half-complex spectrum is cached lazily so that chains of
    spectral operations reuse one forward transform, and projections such
    as :func:`dealias` are bitwise idempotent.
    """

    __slots__ = ("grid", "values", "_spec")

    def __init__(self, grid: Grid2D, values: np.ndarray):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (grid.n1, grid.n2):
            raise GridMismatch(
                f"field shape {values.shape} does not match grid ({grid.n1}, {grid.n2})"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidParam("field contains non-finite samples")
        self.grid = grid
        self.values = values
        self._spec = None

    @classmethod
    def zeros(cls, grid: Grid2D) -> "RealField2D":
        return cls(grid, np.zeros((grid.n1, grid.n2)))

    @classmethod
    def full(cls, grid: Grid2D, value: float) -> "RealField2D":
        return cls(grid, np.full((grid.n1, grid.n2), float(value)))

    @classmethod
    def from_function(cls, grid: Grid2D, fn) -> "RealField2D":
        xx1, xx2 = grid.meshgrid()
        return cls(grid, np.asarray(fn(xx1, xx2), dtype=np.float64))

    def copy(self) -> "RealField2D":
        out = RealField2D(self.grid, self.values.copy())
        out._spec = self._spec
        return out

    def _coerce(self, other):
        if isinstance(other, RealField2D):
            if other.grid != self.grid:
                raise GridMismatch("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return RealField2D(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return RealField2D(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return RealField2D(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other):
        return RealField2D(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return RealField2D(self.grid, self.values / self._coerce(other))

    def __neg__(self):
        return RealField2D(self.grid, -self.values)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def l2(self) -> float:
        """Continuum-normalized L2 norm (cell-area-weighted)."""
        return float(np.sqrt(self.grid.cell_area * np.sum(self.values**2)))


def require_same_grid(*fields: RealField2D) -> Grid2D:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise GridMismatch("fields live on different grids")
    return grid


# ---------------------------------------------------------------------------
# Transforms and spectral calculus
# ---------------------------------------------------------------------------

def spectrum(f: RealField2D) -> np.ndarray:
    """Half-complex spectrum of ``f``, cached on the field.

    The returned array is shared; callers must not modify it.
    """
    if f._spec is None:
        f._spec = np.fft.rfft2(f.values)
    return f._spec


def inverse(grid: Grid2D, spec: np.ndarray) -> RealField2D:
    """Field from a half-complex spectrum; the spectrum is kept as the cache."""
    out = RealField2D(grid, np.fft.irfft2(spec, s=(grid.n1, grid.n2)))
    out._spec = spec
    return out


def deriv(f: RealField2D, a: int, b: int) -> RealField2D:
    """Spectral derivative d^a/dx1^a d^b/dx2^b; identity for a = b = 0."""
    if a < 0 or b < 0:
        raise InvalidParam("derivative orders must be non-negative")
    if a == 0 and b == 0:
        return f.copy()
    return inverse(f.grid, spectrum(f) * f.grid.spectral_multiplier(a, b))


def x1_line_means(f: RealField2D) -> np.ndarray:
    """Mean along x1 of every x2-line, length n2."""
    return f.values.mean(axis=0)


def antideriv_x1(f: RealField2D) -> RealField2D:
    """Invert d/dx1 on a field whose x1-line means vanish.

    Returns the unique antiderivative with zero x1-mean on every x2-line.
    Raises :class:`NonZeroMean` when any line mean of ``f`` exceeds
    ``TOL_MEAN`` in absolute value.
    """
    means = x1_line_means(f)
    worst = float(np.max(np.abs(means)))
    if worst > TOL_MEAN:
        raise NonZeroMean(
            f"x1-line mean {worst:.3e} exceeds tolerance {TOL_MEAN:.1e}"
        )
    grid = f.grid
    inv = np.zeros(grid.n1, dtype=complex)
    k1 = grid.k1
    nz = k1 != 0.0
    inv[nz] = 1.0 / (1j * k1[nz])
    inv[grid.n1 // 2] = 0.0  # Nyquist plane annihilated, as for odd-order deriv
    spec = spectrum(f) * inv[:, None]
    spec[0, :] = 0.0
    return inverse(grid, spec)


def project_zero_x1_mean(f: RealField2D) -> RealField2D:
    """Remove the x1-mean of every x2-line (the KP constraint projection)."""
    return RealField2D(f.grid, f.values - x1_line_means(f)[None, :])


def dealias(f: RealField2D) -> RealField2D:
    """Zero all modes beyond the 2/3 cutoff in either direction.

    A projection: applying it to its own output reuses the cached masked
    spectrum, so the second application reproduces the field bitwise.
    """
    spec = dealias_spec(f.grid, spectrum(f))
    return inverse(f.grid, spec)


def dealias_spec(grid: Grid2D, spec: np.ndarray) -> np.ndarray:
    out = spec.copy()
    out[~grid.dealias_mask] = 0.0
    return out


def translate_x1(f: RealField2D, shift: float) -> RealField2D:
    """Periodic translation f(x1 - shift, x2), evaluated spectrally."""
    grid = f.grid
    k1 = grid.k1.copy()
    k1[grid.n1 // 2] = 0.0  # no sign information at Nyquist
    phase = np.exp(-1j * k1 * shift)
    return inverse(grid, spectrum(f) * phase[:, None])


def seminorm_sq(f: RealField2D, a: int, b: int) -> float:
    """Squared continuum L2 norm of d^a d^b f, evaluated by Parseval."""
    grid = f.grid
    mult = np.abs(grid.spectral_multiplier(a, b)) ** 2
    w = grid.parseval_weights[None, :]
    total = float(np.sum(w * mult * np.abs(spectrum(f)) ** 2))
    return total * grid.l1 * grid.l2 / (grid.n1 * grid.n2) ** 2


# ---------------------------------------------------------------------------
# Newton solver harness
# ---------------------------------------------------------------------------

def _l2_discrete(values: np.ndarray) -> float:
    return float(np.linalg.norm(values.ravel()))


def newton_solve(
    residual: Callable[[RealField2D], RealField2D],
    jacobian_apply: Callable[[RealField2D, RealField2D], RealField2D],
    guess: RealField2D,
    tol: float,
    max_iter: int = 25,
    precondition: Optional[Callable[[RealField2D, RealField2D], RealField2D]] = None,
    guard: Optional[Callable[[RealField2D], bool]] = None,
    max_backtracks: int = 30,
    linear_maxiter: int = 200,
) -> RealField2D:
    """Newton iteration with an inner matrix-free GMRES solve.

    Parameters
    ----------
    residual
        Maps a field to the residual field; a root is sought in the
        discrete l2 norm, ``||residual(x)||_2 <= tol``.
    jacobian_apply
        ``(x, v) -> J(x) v``, the directional derivative of ``residual``.
    precondition
        Optional approximate inverse ``(x, r) -> J(x)^{-1} r`` used as the
        GMRES preconditioner.
    guard
        Optional admissibility predicate; a step whose candidate fails the
        guard is halved, and :class:`StepRejected` is raised once
        ``max_backtracks`` halvings are exhausted.

    The inner linear solve is run to absolute tolerance ``tol / 10``.
    """
    if tol <= 0:
        raise InvalidParam("tol must be positive")
    grid = guess.grid
    shape = (grid.n1, grid.n2)
    size = grid.npoints

    x = guess.copy()
    r = residual(x)
    rnorm = _l2_discrete(r.values)
    for iteration in range(max_iter):
        if rnorm <= tol:
            return x

        def matvec(v, _x=x):
            field = RealField2D(grid, v.reshape(shape))
            # fresh buffer: GMRES owns the returned array
            return jacobian_apply(_x, field).values.reshape(-1).copy()

        op = LinearOperator((size, size), matvec=matvec, dtype=np.float64)
        m_op = None
        if precondition is not None:
            def psolve(v, _x=x):
                field = RealField2D(grid, v.reshape(shape))
                return precondition(_x, field).values.reshape(-1).copy()

            m_op = LinearOperator((size, size), matvec=psolve, dtype=np.float64)
        rhs = -r.values.ravel()
        d, info = gmres(op, rhs, rtol=1e-12, atol=tol / 10.0, maxiter=linear_maxiter, M=m_op)
        if info > 0:
            # GMRES hit its cap; a partial step is still a descent direction,
            # so keep going and let the outer loop judge progress.
            pass
        step = d.reshape(shape)

        alpha = 1.0
        accepted = False
        guard_blocked = False
        for _ in range(max_backtracks + 1):
            candidate = RealField2D(grid, x.values + alpha * step)
            if guard is not None and not guard(candidate):
                guard_blocked = True
                alpha *= 0.5
                continue
            guard_blocked = False
            r_new = residual(candidate)
            rnorm_new = _l2_discrete(r_new.values)
            if rnorm_new <= tol or rnorm_new < rnorm:
                x, r, rnorm = candidate, r_new, rnorm_new
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            if guard_blocked:
                raise StepRejected(
                    f"backtracking exhausted after {max_backtracks} halvings"
                )
            raise NoConvergence(
                f"Newton stalled at iteration {iteration + 1}, residual {rnorm:.3e}",
                iterations=iteration + 1,
                residual_norm=rnorm,
            )
    if rnorm <= tol:
        return x
    raise NoConvergence(
        f"no convergence after {max_iter} iterations, residual {rnorm:.3e}",
        iterations=max_iter,
        residual_norm=rnorm,
    )
