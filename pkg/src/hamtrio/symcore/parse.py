"""Recursive-descent parser for the expression grammar.

    expr   := ['-'] term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base ('^' uint)?
    base   := rational | name | '(' expr ')'

A leading unary minus is accepted in ``expr`` so that the printer output
(``-u1 + 2``) parses back.
"""

from __future__ import annotations

import re

from gmpy2 import mpq

from hamtrio.symcore.poly import Polynomial
from hamtrio.symcore.ratfunc import RationalFunction
from hamtrio.symcore.vars import VarTable


class ParseError(ValueError):
    pass


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")


def _tokenize(text: str):
    toks = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            break
        num, name, op = m.groups()
        if num is not None:
            toks.append(("num", num, m.start(1)))
        elif name is not None:
            toks.append(("name", name, m.start(2)))
        else:
            if op not in "+-*/^()":
                raise ParseError(f"unexpected character {op!r} at {m.start(3)}")
            toks.append(("op", op, m.start(3)))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, vars: VarTable | None):
        self.toks = _tokenize(text)
        self.i = 0
        self.vars = vars

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, op):
        t = self.take()
        if t != ("op", op, t[2]):
            raise ParseError(f"expected {op!r} at {t[2]}, got {t[1] or 'end of input'!r}")

    def expr(self):
        neg = False
        if self.peek()[:2] == ("op", "-"):
            self.take()
            neg = True
        acc = self.term()
        if neg:
            acc = -acc
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def term(self):
        acc = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            rhs = self.factor()
            if op == "*":
                acc = acc * rhs
            else:
                if rhs.is_zero:
                    raise ZeroDivisionError("division by the zero polynomial")
                acc = RationalFunction.of(acc) / rhs
        return acc

    def factor(self):
        base = self.base()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            t = self.take()
            if t[0] != "num":
                raise ParseError(f"exponent must be a non-negative integer at {t[2]}")
            base = base ** int(t[1])
        return base

    def base(self):
        t = self.take()
        kind, val, pos = t
        if kind == "num":
            return Polynomial.const(mpq(int(val)))
        if kind == "name":
            if self.vars is not None and val not in self.vars:
                raise ParseError(f"undeclared name {val!r} at {pos}")
            return Polynomial.var(val)
        if (kind, val) == ("op", "("):
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"unexpected {val or 'end of input'!r} at {pos}")


def parse_expr(text: str, vars: VarTable | None = None):
    """Parse ``text`` to a Polynomial, or a RationalFunction when a genuine quotient remains.

    With ``vars`` given, every name must be declared there.
    """
    p = _Parser(text, vars)
    if p.peek()[0] == "end":
        raise ParseError("empty expression")
    value = p.expr()
    t = p.peek()
    if t[0] != "end":
        raise ParseError(f"unexpected {t[1]!r} at {t[2]}")
    if isinstance(value, RationalFunction) and value.is_polynomial:
        return value.as_polynomial()
    return value


def emit(value) -> str:
    return str(value)
