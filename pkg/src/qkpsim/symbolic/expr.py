"""Canonical expression trees for the expansion engine.

An :class:`Expr` is a flattened sum of monomials.  Each monomial is a
rational coefficient times a sorted product of atom powers.  Atoms are

* parameters ``V`` and ``H`` (integer exponents, V may be negative),
* the amplitude parameter in half-integer powers, stored as integer
  exponents of its square root (``("e",)``),
* field symbols ``("f", name, k, a, b, t)``: expansion order ``k >= 1``
  and an inert derivative multi-index (a, b, t) for d/dx1, d/dx2, d/dt.

Structurally equal expressions compare (and hash) equal, so canonical
form doubles as the equality test.  All arithmetic is exact.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Optional

EPS_ATOM = ("e",)
V_ATOM = ("p", "V")
H_ATOM = ("p", "H")

FIELD_NAMES = ("n_i", "n_e", "u_i1", "u_i2", "phi")


def FieldAtom(name: str, k: int, a: int = 0, b: int = 0, t: int = 0) -> tuple:
    if name not in FIELD_NAMES:
        raise ValueError(f"unknown field name {name!r}")
    if k < 1 or a < 0 or b < 0 or t < 0:
        raise ValueError("field atom needs k >= 1 and non-negative derivative orders")
    return ("f", name, k, a, b, t)


def _mul_factors(fa: tuple, fb: tuple) -> tuple:
    """Merge two sorted factor tuples, adding exponents of shared atoms."""
    out = dict(fa)
    for atom, exp in fb:
        new = out.get(atom, 0) + exp
        if new == 0:
            out.pop(atom, None)
        else:
            out[atom] = new
    return tuple(sorted(out.items()))


class Expr:
    """Immutable canonical sum of monomials."""

    __slots__ = ("monomials",)

    def __init__(self, monomials: Iterable[tuple] = ()):
        # monomials: iterable of (Fraction coeff, factors tuple); merges
        # duplicates and drops zeros so the stored form is canonical.
        acc = {}
        for coeff, factors in monomials:
            if coeff == 0:
                continue
            acc[factors] = acc.get(factors, Fraction(0)) + coeff
        self.monomials = tuple(
            sorted(((c, f) for f, c in acc.items() if c != 0), key=lambda m: m[1])
        )

    # -- constructors -------------------------------------------------------

    @staticmethod
    def zero() -> "Expr":
        return Expr()

    @staticmethod
    def const(value) -> "Expr":
        return Expr([(Fraction(value), ())])

    @staticmethod
    def atom(atom: tuple, exp: int = 1) -> "Expr":
        if exp == 0:
            return Expr.const(1)
        return Expr([(Fraction(1), ((atom, exp),))])

    @staticmethod
    def eps_half(m: int = 1) -> "Expr":
        """The amplitude parameter to the power m/2."""
        return Expr.atom(EPS_ATOM, m)

    @staticmethod
    def field(name: str, k: int, a: int = 0, b: int = 0, t: int = 0) -> "Expr":
        return Expr.atom(FieldAtom(name, k, a, b, t))

    # -- algebra ------------------------------------------------------------

    def __add__(self, other) -> "Expr":
        other = _as_expr(other)
        return Expr(self.monomials + other.monomials)

    __radd__ = __add__

    def __sub__(self, other) -> "Expr":
        return self + (-_as_expr(other))

    def __rsub__(self, other):
        return _as_expr(other) + (-self)

    def __neg__(self) -> "Expr":
        return Expr([(-c, f) for c, f in self.monomials])

    def __mul__(self, other) -> "Expr":
        other = _as_expr(other)
        out = []
        for ca, fa in self.monomials:
            for cb, fb in other.monomials:
                out.append((ca * cb, _mul_factors(fa, fb)))
        return Expr(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Expr":
        if n < 0:
            raise ValueError("negative powers only via div_monomial")
        out = Expr.const(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, Expr) and self.monomials == other.monomials

    def __hash__(self):
        return hash(self.monomials)

    def is_zero(self) -> bool:
        return not self.monomials

    # -- structure queries ---------------------------------------------------

    def is_monomial(self) -> bool:
        return len(self.monomials) == 1

    def div_monomial(self, other: "Expr") -> "Expr":
        """Divide by a single-monomial expression (exponents may go negative)."""
        if not other.is_monomial():
            raise ValueError("divisor must be a single monomial")
        (dc, df), = other.monomials
        inv = tuple((atom, -exp) for atom, exp in df)
        return Expr([(c / dc, _mul_factors(f, inv)) for c, f in self.monomials])

    def eps_grades(self) -> dict:
        """Partition per power of the amplitude parameter.

        Returns ``{grade: Expr}`` where ``grade`` is a Fraction (in whole
        amplitude-parameter units) and the expressions carry no amplitude
        atom.
        """
        buckets = {}
        for c, f in self.monomials:
            m = 0
            rest = []
            for atom, exp in f:
                if atom == EPS_ATOM:
                    m = exp
                else:
                    rest.append((atom, exp))
            grade = Fraction(m, 2)
            buckets.setdefault(grade, []).append((c, tuple(rest)))
        return {g: Expr(ms) for g, ms in sorted(buckets.items())}

    def truncate_eps(self, max_half_power: int) -> "Expr":
        """Drop monomials whose amplitude exponent exceeds max_half_power/2."""
        keep = []
        for c, f in self.monomials:
            m = next((exp for atom, exp in f if atom == EPS_ATOM), 0)
            if m <= max_half_power:
                keep.append((c, f))
        return Expr(keep)

    def max_field_atom_exp(self) -> int:
        worst = 0
        for _, f in self.monomials:
            for atom, exp in f:
                if atom[0] == "f":
                    worst = max(worst, exp)
        return worst

    def field_atoms(self) -> set:
        out = set()
        for _, f in self.monomials:
            for atom, _exp in f:
                if atom[0] == "f":
                    out.add(atom)
        return out

    def coefficient_of_field_part(self) -> dict:
        """Group monomials by their field-symbol content.

        Returns ``{field_factors: Expr}`` where ``field_factors`` is the
        tuple of (field atom, exponent) pairs of each monomial and the
        value collects everything else (parameters, amplitude powers).
        """
        groups = {}
        for c, f in self.monomials:
            fields = tuple((a, e) for a, e in f if a[0] == "f")
            rest = tuple((a, e) for a, e in f if a[0] != "f")
            groups.setdefault(fields, []).append((c, rest))
        return {k: Expr(ms) for k, ms in groups.items()}

    # -- calculus -----------------------------------------------------------

    def _derive(self, which: int) -> "Expr":
        # which: 0 -> x1, 1 -> x2, 2 -> t.  Product rule over field atoms;
        # parameters and the amplitude are constants.
        out = []
        for c, f in self.monomials:
            for i, (atom, exp) in enumerate(f):
                if atom[0] != "f":
                    continue
                name, k, a, b, t = atom[1:]
                bumped = (
                    "f",
                    name,
                    k,
                    a + (which == 0),
                    b + (which == 1),
                    t + (which == 2),
                )
                rest = f[:i] + ((atom, exp - 1),) + f[i + 1 :]
                rest = tuple((at, e) for at, e in rest if e != 0)
                out.append((c * exp, _mul_factors(rest, ((bumped, 1),))))
        return Expr(out)

    def dx1(self) -> "Expr":
        return self._derive(0)

    def dx2(self) -> "Expr":
        return self._derive(1)

    def dt(self) -> "Expr":
        return self._derive(2)

    # -- rewriting ----------------------------------------------------------

    def rewrite_fields(self, rule: Callable[[tuple], Optional["Expr"]]) -> "Expr":
        """Replace field atoms by expressions.

        ``rule(atom)`` returns a replacement Expr for one power of the
        atom, or None to keep it.  A monomial with the atom to power p
        receives replacement**p.
        """
        out = Expr.zero()
        for c, f in self.monomials:
            term = Expr([(c, ())])
            for atom, exp in f:
                rep = rule(atom) if atom[0] == "f" else None
                if rep is None:
                    term = term * Expr.atom(atom, exp)
                else:
                    term = term * rep**exp
            out = out + term
        return out

    def reduce_V(self) -> "Expr":
        """Normalize V-exponents modulo V^2 = 1 (so V^-1 -> V, V^2 -> 1)."""
        out = []
        for c, f in self.monomials:
            newf = []
            for atom, exp in f:
                if atom == V_ATOM:
                    exp = exp % 2
                    if exp == 0:
                        continue
                newf.append((atom, exp))
            out.append((c, tuple(sorted(newf))))
        return Expr(out)

    def subs_params(self, V=None, H=None) -> "Expr":
        """Substitute numeric (rational) values for V and/or H."""
        out = []
        for c, f in self.monomials:
            coeff = c
            newf = []
            for atom, exp in f:
                if atom == V_ATOM and V is not None:
                    coeff *= Fraction(V) ** exp
                elif atom == H_ATOM and H is not None:
                    coeff *= Fraction(H) ** exp
                else:
                    newf.append((atom, exp))
            out.append((coeff, tuple(sorted(newf))))
        return Expr(out)

    def eval_num(self, V: float, H: float) -> float:
        """Numeric value of a field-free expression."""
        total = 0.0
        for c, f in self.monomials:
            term = float(c)
            for atom, exp in f:
                if atom == V_ATOM:
                    term *= float(V) ** exp
                elif atom == H_ATOM:
                    term *= float(H) ** exp
                else:
                    raise ValueError(f"cannot evaluate atom {atom}")
            total += term
        return total

    # -- printing -----------------------------------------------------------

    def __str__(self) -> str:
        if not self.monomials:
            return "0"
        parts = []
        for i, (c, f) in enumerate(self.monomials):
            body = _monomial_str(abs(c), f)
            if i == 0:
                parts.append(body if c > 0 else f"-{body}")
            else:
                parts.append(f" + {body}" if c > 0 else f" - {body}")
        return "".join(parts)

    __repr__ = __str__


def _atom_str(atom: tuple, exp: int) -> str:
    if atom == EPS_ATOM:
        power = Fraction(exp, 2)
        if power == 1:
            return "eps"
        return f"eps^{power}"
    if atom[0] == "p":
        base = atom[1]
    else:
        _, name, k, a, b, t = atom
        base = f"D[{a},{b},{t}]{{{name},{k}}}"
    if exp == 1:
        return base
    return f"{base}^{exp}"


def _monomial_str(coeff: Fraction, factors: tuple) -> str:
    atoms = [_atom_str(a, e) for a, e in factors]
    if not atoms:
        return str(coeff)
    if coeff == 1:
        return "*".join(atoms)
    return "*".join([str(coeff)] + atoms)


def _as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return Expr.const(value)


def canon(e: Expr) -> Expr:
    """Canonicalization map; a projection (already canonical input is fixed)."""
    return Expr(e.monomials)


V = Expr.atom(V_ATOM)
H = Expr.atom(H_ATOM)
EPS = Expr.eps_half(2)
SEPS = Expr.eps_half(1)
ONE = Expr.const(1)
