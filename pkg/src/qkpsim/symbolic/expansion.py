"""Order-by-order expansion of the scaled ion-electron system.

Substitutes the small-amplitude series for (n_i, n_e, u_i1, u_i2) into
the five scaled equations (mass, both momentum components, the Poisson
constraint, and the electron potential relation), collects powers of the
amplitude parameter, and mechanically extracts the solvability condition
V^2 = 1 and the coefficients of the resulting KP-type model

    d/dx1 ( d/dt n + a n d/dx1 n + b d^3/dx1^3 n ) + c d^2/dx2^2 n = 0,

with a = 3V/2 + 1/(2V), b = (1 - H^2/4)/(2V), c = V/2.

The potential relation is pre-expanded by exact Taylor rules for the
square-root terms, so derivative symbols stay inert and the algebra is
finite.  Everything is exact rational arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial

from ..errors import DerivationMismatch, InvalidParam
from .expr import EPS, Expr, FieldAtom, SEPS, V_ATOM, H as H_SYM, V as V_SYM

SOURCES = ("mass", "momentum-x1", "momentum-x2", "poisson", "potential")

#: Highest grade the engine is asked for (orders needed for the artifact).
MAX_GRADE = Fraction(3)


@dataclass(frozen=True)
class OrderEquation:
    """One graded equation ``lhs = 0`` extracted from a scaled equation."""

    grade: Fraction
    source: str
    lhs: Expr

    def __post_init__(self):
        if self.source not in SOURCES:
            raise InvalidParam(f"unknown source {self.source!r}")
        for _, factors in self.lhs.monomials:
            for atom, _ in factors:
                if atom == ("e",):
                    raise InvalidParam("order equation still contains the amplitude")


def _binomial_series_coeff(alpha: Fraction, j: int) -> Fraction:
    """Taylor coefficient of (1+x)^alpha at order j, exactly."""
    num = Fraction(1)
    for i in range(j):
        num *= alpha - i
    return num / factorial(j)


def _series_of_power(x: Expr, alpha: Fraction, max_half: int) -> Expr:
    """(1 + x)^alpha as a truncated exact Taylor series.

    ``x`` must vanish at zeroth amplitude order so that powers of x raise
    the grade; the series terminates once x^j exceeds the truncation.
    """
    out = Expr.const(1)
    xj = Expr.const(1)
    j = 0
    while True:
        j += 1
        xj = (xj * x).truncate_eps(max_half)
        if xj.is_zero():
            break
        out = out + _binomial_series_coeff(alpha, j) * xj
    return out


class ExpansionEngine:
    """Builds the substituted scaled equations up to a grade cutoff."""

    def __init__(self, max_grade=MAX_GRADE):
        max_grade = Fraction(max_grade)
        if max_grade > MAX_GRADE:
            raise InvalidParam(f"max_grade must be <= {MAX_GRADE}, got {max_grade}")
        if max_grade < 1:
            raise InvalidParam("max_grade must be >= 1")
        self.max_grade = max_grade
        self.max_half = int(2 * max_grade)
        self.kmax = int(max_grade) + 1

        kr = range(1, self.kmax + 1)
        eps_k = [EPS**k for k in kr]
        self.n_i = Expr.const(1) + sum(
            (eps_k[k - 1] * Expr.field("n_i", k) for k in kr), Expr.zero()
        )
        self.n_e = Expr.const(1) + sum(
            (eps_k[k - 1] * Expr.field("n_e", k) for k in kr), Expr.zero()
        )
        self.u_i1 = sum((eps_k[k - 1] * Expr.field("u_i1", k) for k in kr), Expr.zero())
        # transverse velocity enters at half-integer powers: eps^(k + 1/2)
        self.u_i2 = sum(
            (Expr.eps_half(2 * k + 1) * Expr.field("u_i2", k) for k in kr), Expr.zero()
        )
        self.phi_series = self._potential_series()
        self.phi_symbols = sum(
            (eps_k[k - 1] * Expr.field("phi", k) for k in kr), Expr.zero()
        )

    def _trunc(self, e: Expr) -> Expr:
        return e.truncate_eps(self.max_half)

    def _laplace_scaled(self, g: Expr) -> Expr:
        """The scaled Laplacian: eps d^2/dx1^2 + eps^2 d^2/dx2^2."""
        return EPS * g.dx1().dx1() + EPS * EPS * g.dx2().dx2()

    def _potential_series(self) -> Expr:
        """Electron potential relation pre-expanded in the density series.

        phi = -1/2 + n_e^2/2 - (H^2/2) * (scaled Laplacian sqrt(n_e)) / sqrt(n_e),
        with sqrt(n_e) and 1/sqrt(n_e) expanded by exact Taylor rules about
        the equilibrium density 1.
        """
        x = self._trunc(self.n_e - Expr.const(1))
        sqrt_ne = _series_of_power(x, Fraction(1, 2), self.max_half)
        inv_sqrt_ne = _series_of_power(x, Fraction(-1, 2), self.max_half)
        bohm = self._trunc(inv_sqrt_ne * self._trunc(self._laplace_scaled(sqrt_ne)))
        quad = self._trunc(self.n_e * self.n_e)
        h2 = H_SYM * H_SYM
        return self._trunc(
            Expr.const(Fraction(-1, 2))
            + Fraction(1, 2) * quad
            - Fraction(1, 2) * h2 * bohm
        )

    def substituted_equation(self, source: str) -> Expr:
        """The fully substituted scaled equation, truncated at the cutoff."""
        t = self._trunc
        n_i, n_e, u1, u2 = self.n_i, self.n_e, self.u_i1, self.u_i2
        phi = self.phi_series
        if source == "mass":
            return t(
                EPS * n_i.dt()
                - V_SYM * n_i.dx1()
                + t(n_i * u1).dx1()
                + SEPS * t(n_i * u2).dx2()
            )
        if source == "momentum-x1":
            return t(
                EPS * u1.dt()
                - V_SYM * u1.dx1()
                + t(u1 * u1.dx1())
                + SEPS * t(u2 * u1.dx2())
                + phi.dx1()
            )
        if source == "momentum-x2":
            return t(
                EPS * u2.dt()
                - V_SYM * u2.dx1()
                + t(u1 * u2.dx1())
                + SEPS * t(u2 * u2.dx2())
                + SEPS * phi.dx2()
            )
        if source == "poisson":
            return t(self._laplace_scaled(phi) - n_e + n_i)
        if source == "potential":
            return t(self.phi_symbols - phi)
        raise InvalidParam(f"unknown source {source!r}")


def expand_orders(max_grade=MAX_GRADE) -> list[OrderEquation]:
    """All nonzero order equations of grade <= max_grade, per source."""
    engine = ExpansionEngine(max_grade)
    out = []
    for source in SOURCES:
        full = engine.substituted_equation(source)
        for grade, lhs in full.eps_grades().items():
            if lhs.is_zero() or grade > engine.max_grade:
                continue
            out.append(OrderEquation(grade=grade, source=source, lhs=lhs))
    return out


def order_equation(eqs: list[OrderEquation], source: str, grade) -> Expr:
    grade = Fraction(grade)
    for eq in eqs:
        if eq.source == source and eq.grade == grade:
            return eq.lhs
    return Expr.zero()


# ---------------------------------------------------------------------------
# Solvability condition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SoundSpeed:
    """Result of the leading-order solvability analysis."""

    char_poly: Expr  # V^2 - 1
    roots: tuple
    V: int  # chosen branch (+1, right-moving)


_FIRST_ORDER_UNKNOWNS = ("n_i", "u_i1", "n_e")


def _linear_coefficient_row(lhs: Expr) -> list[Expr]:
    """Coefficients of the first-order unknowns in a linear order equation."""
    row = [Expr.zero() for _ in _FIRST_ORDER_UNKNOWNS]
    for fields, coeff in lhs.coefficient_of_field_part().items():
        if len(fields) != 1 or fields[0][1] != 1:
            raise DerivationMismatch("leading-order equation is not linear")
        atom = fields[0][0]
        name, k = atom[1], atom[2]
        if k != 1 or name not in _FIRST_ORDER_UNKNOWNS:
            raise DerivationMismatch(f"unexpected symbol {atom} at leading order")
        row[_FIRST_ORDER_UNKNOWNS.index(name)] += coeff
    return row


def solve_sound_speed() -> SoundSpeed:
    """Vanishing-determinant condition of the leading-order system.

    Assembles the 3x3 coefficient matrix of the grade-1 equations in
    (n_i^(1), u_i1^(1), n_e^(1)) and expands its determinant exactly.
    """
    eqs = expand_orders(1)
    rows = []
    for source in ("mass", "momentum-x1", "poisson"):
        rows.append(_linear_coefficient_row(order_equation(eqs, source, 1)))
    m = rows
    det = (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )
    # normalize the leading V coefficient to +1
    v2 = Expr.atom(V_ATOM, 2)
    if det == -(v2 - Expr.const(1)):
        det = -det
    if det != v2 - Expr.const(1):
        raise DerivationMismatch(f"unexpected characteristic polynomial: {det}")
    return SoundSpeed(char_poly=det, roots=(1, -1), V=1)


# ---------------------------------------------------------------------------
# Model-coefficient derivation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QkpDerivation:
    """Coefficients of the derived KP-type equation, as exact expressions.

    ``a``, ``b``, ``c`` keep the raw rational-in-V form produced by the
    elimination (before reducing V^2 -> 1), matching the conventional
    presentation 3V/2 + 1/(2V) etc.
    """

    a: Expr
    b: Expr
    c: Expr

    def coefficients_at(self, V: float, H: float) -> tuple:
        return (
            self.a.eval_num(V, H),
            self.b.eval_num(V, H),
            self.c.eval_num(V, H),
        )


def _profile_rule_first_order(atom: tuple):
    """Rewrite rules from the leading-order relations.

    n_e^(1) -> n_i^(1) and u_i1^(1) -> V n_i^(1), derivatives carried along.
    """
    _, name, k, a, b, t = atom
    if k != 1:
        return None
    if name == "n_e":
        return Expr.atom(FieldAtom("n_i", 1, a, b, t))
    if name == "u_i1":
        return V_SYM * Expr.atom(FieldAtom("n_i", 1, a, b, t))
    return None


def _transverse_rule(atom: tuple):
    """d/dx1 u_i2^(1) -> V d/dx2 n_i^(1), for symbols carrying an x1 derivative."""
    _, name, k, a, b, t = atom
    if name == "u_i2" and k == 1 and a >= 1:
        return V_SYM * Expr.atom(FieldAtom("n_i", 1, a - 1, b + 1, t))
    return None


_SLOT_TIME = ((FieldAtom("n_i", 1, 1, 0, 1), 1),)
_SLOT_NL_GRAD = ((FieldAtom("n_i", 1, 1, 0, 0), 2),)
_SLOT_NL_SECOND = ((FieldAtom("n_i", 1, 0, 0, 0), 1), (FieldAtom("n_i", 1, 2, 0, 0), 1))
_SLOT_DISPERSIVE = ((FieldAtom("n_i", 1, 4, 0, 0), 1),)
_SLOT_TRANSVERSE = ((FieldAtom("n_i", 1, 0, 2, 0), 1),)


def derive_qkp(rule_order=("profiles", "transverse")) -> QkpDerivation:
    """Combine the grade-2 equations into the KP-type model.

    Procedure: d/dx1 of the grade-2 Poisson equation, plus V times the
    grade-2 mass equation, plus the grade-2 x1-momentum equation; then the
    whole combination is differentiated in x1 and the first-order profile
    relations are installed as rewrite rules.  The result must collapse to
    the four-slot normal form; anything left over raises
    :class:`DerivationMismatch`.

    ``rule_order`` permutes rewrite-rule application (the outcome must not
    depend on it).
    """
    eqs = expand_orders(2)
    mass2 = order_equation(eqs, "mass", 2)
    mom2 = order_equation(eqs, "momentum-x1", 2)
    poisson2 = order_equation(eqs, "poisson", 2)

    combined = V_SYM * mass2 + mom2 + poisson2.dx1()
    combined = combined.dx1()
    rules = {
        "profiles": _profile_rule_first_order,
        "transverse": _transverse_rule,
    }
    for name in rule_order:
        combined = combined.rewrite_fields(rules[name])

    slots = {
        _SLOT_TIME: Expr.zero(),
        _SLOT_NL_GRAD: Expr.zero(),
        _SLOT_NL_SECOND: Expr.zero(),
        _SLOT_DISPERSIVE: Expr.zero(),
        _SLOT_TRANSVERSE: Expr.zero(),
    }
    for fields, coeff in combined.coefficient_of_field_part().items():
        if fields in slots:
            slots[fields] += coeff
            continue
        if not coeff.reduce_V().is_zero():
            raise DerivationMismatch(
                f"stray term {coeff} * {fields} survives the elimination"
            )
    time_coeff = slots[_SLOT_TIME]
    if time_coeff.reduce_V().is_zero():
        raise DerivationMismatch("time-derivative slot vanished")
    if slots[_SLOT_NL_GRAD] != slots[_SLOT_NL_SECOND]:
        raise DerivationMismatch(
            "nonlinear term is not a perfect x1-derivative: "
            f"{slots[_SLOT_NL_GRAD]} vs {slots[_SLOT_NL_SECOND]}"
        )
    if not time_coeff.is_monomial():
        time_coeff = time_coeff.reduce_V()
    a = slots[_SLOT_NL_GRAD].div_monomial(time_coeff)
    b = slots[_SLOT_DISPERSIVE].div_monomial(time_coeff)
    c = slots[_SLOT_TRANSVERSE].div_monomial(time_coeff)
    return QkpDerivation(a=a, b=b, c=c)


def derivation_report(max_grade=MAX_GRADE) -> str:
    """Plain-text report: every order equation plus the model coefficients."""
    lines = []
    lines.append("order equations (lhs = 0), grades up to "
                 f"{Fraction(max_grade)}")
    for eq in expand_orders(max_grade):
        lines.append(f"[{eq.source}] O(eps^{eq.grade}): {eq.lhs}")
    speed = solve_sound_speed()
    lines.append(f"solvability: {speed.char_poly} = 0, roots V in {{+1, -1}}, "
                 f"branch V = +{speed.V}")
    derived = derive_qkp()
    lines.append("model: D[1,0,0](dt n + a n dx1 n + b dx1^3 n) + c dx2^2 n = 0 "
                 "for n = n_i^(1)")
    lines.append(f"a = {derived.a}")
    lines.append(f"b = {derived.b}")
    lines.append(f"c = {derived.c}")
    return "\n".join(lines) + "\n"
