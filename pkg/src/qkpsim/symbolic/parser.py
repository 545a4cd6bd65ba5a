"""Parser for the expression grammar used in tests and golden files.

Grammar (whitespace ignored)::

    expr     := term (('+' | '-') term)*
    term     := factor ('*' factor)*
    factor   := '-'? primary ('^' exponent)?
    primary  := RATIONAL | 'eps' | 'V' | 'H' | deriv | '(' expr ')'
    deriv    := 'D' '[' INT ',' INT ',' INT ']' '{' NAME ',' INT '}'
    exponent := '-'? RATIONAL

RATIONAL is ``digits`` or ``digits/digits``.  Fractional exponents are
only meaningful on ``eps`` (half-integer powers); parameter and field
exponents must be integers.  Canonical printing round-trips through this
grammar.
"""

from __future__ import annotations

import re
from fractions import Fraction

from ..errors import ParseError
from .expr import EPS_ATOM, Expr, FieldAtom, H_ATOM, V_ATOM

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<rational>\d+(?:/\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<punct>[-+*^()\[\]{},]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None or match.end() == pos:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            bad_at = len(text) - len(stripped)
            raise ParseError(f"unexpected character {text[bad_at]!r}", bad_at)
        kind = match.lastgroup
        value = match.group(kind)
        start = match.end() - len(value)
        tokens.append((kind, value, start))
        pos = match.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def _err_pos(self, pos: int) -> int:
        """Blame unexpected end-of-input on the last consumed token."""
        if self.i >= 2 and self.tokens[self.i - 1][0] == "end":
            return self.tokens[self.i - 2][2]
        return pos

    def expect(self, value: str):
        kind, val, pos = self.peek()
        if val != value:
            raise ParseError(f"expected {value!r}", pos)
        return self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected trailing token {val!r}", pos)
        return e

    def expr(self) -> Expr:
        out = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.advance()[1]
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def term(self) -> Expr:
        out = self.factor()
        while self.peek()[1] == "*":
            self.advance()
            out = out * self.factor()
        return out

    def factor(self) -> Expr:
        negate = False
        if self.peek()[1] == "-":
            self.advance()
            negate = True
        base = self.primary()
        if self.peek()[1] == "^":
            self.advance()
            base = self._apply_power(base)
        return -base if negate else base

    def _apply_power(self, base: Expr) -> Expr:
        sign = 1
        if self.peek()[1] == "-":
            self.advance()
            sign = -1
        kind, val, pos = self.advance()
        if kind != "rational":
            raise ParseError("expected exponent", pos)
        power = sign * Fraction(val)
        if base.is_monomial():
            coeff, factors = base.monomials[0]
            if coeff == 1 and len(factors) == 1:
                atom, exp = factors[0]
                if atom == EPS_ATOM:
                    half = power * exp  # base already counts half-units
                    if half.denominator != 1:
                        raise ParseError("eps exponent must be a half-integer", pos)
                    return Expr.eps_half(int(half))
                if power.denominator == 1:
                    n = int(power) * exp
                    if n == 0:
                        return Expr.const(1)
                    if n > 0:
                        return Expr.atom(atom, n)
                    return Expr.const(1).div_monomial(Expr.atom(atom, -n))
        if power.denominator != 1 or power < 0:
            raise ParseError("general bases allow non-negative integer exponents only", pos)
        return base ** int(power)

    def primary(self) -> Expr:
        kind, val, pos = self.advance()
        if kind == "rational":
            return Expr.const(Fraction(val))
        if kind == "name":
            if val == "eps":
                return Expr.eps_half(2)
            if val == "V":
                return Expr.atom(V_ATOM)
            if val == "H":
                return Expr.atom(H_ATOM)
            if val == "D":
                return self._deriv_symbol(pos)
            raise ParseError(f"unknown symbol {val!r}", pos)
        if val == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        if kind == "end":
            raise ParseError("unexpected end of input", self._err_pos(pos))
        raise ParseError(f"unexpected token {val!r}", pos)

    def _deriv_symbol(self, start: int) -> Expr:
        self.expect("[")
        a = self._int()
        self.expect(",")
        b = self._int()
        self.expect(",")
        t = self._int()
        self.expect("]")
        self.expect("{")
        kind, name, pos = self.advance()
        if kind != "name":
            raise ParseError("expected field name", pos)
        self.expect(",")
        k = self._int()
        self.expect("}")
        try:
            atom = FieldAtom(name, k, a, b, t)
        except ValueError as err:
            raise ParseError(str(err), start) from None
        return Expr.atom(atom)

    def _int(self) -> int:
        kind, val, pos = self.advance()
        if kind != "rational" or "/" in val:
            raise ParseError("expected integer", pos)
        return int(val)


def parse_expr(text: str) -> Expr:
    """Parse ``text`` into a canonical :class:`Expr`.

    Raises :class:`ParseError` carrying the 0-based offending position.
    """
    return _Parser(text).parse()
