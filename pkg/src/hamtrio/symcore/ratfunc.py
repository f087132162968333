"""Rational functions ``num/den`` kept in lowest terms with a monic denominator."""

from __future__ import annotations

from typing import Callable, Mapping

from hamtrio.symcore.gcd import cofactors
from hamtrio.symcore.poly import Polynomial, to_mpq


class RationalFunction:
    __slots__ = ("num", "den")

    def __init__(self, num, den=None, *, _normalized: bool = False):
        num = num if isinstance(num, Polynomial) else Polynomial.const(num)
        den = Polynomial.const(1) if den is None else (den if isinstance(den, Polynomial) else Polynomial.const(den))
        if den.is_zero:
            raise ZeroDivisionError("division by the zero polynomial")
        if not _normalized:
            num, den = _normalize(num, den)
        self.num = num
        self.den = den

    @classmethod
    def of(cls, x) -> "RationalFunction":
        if isinstance(x, RationalFunction):
            return x
        if isinstance(x, Polynomial):
            return cls(x, Polynomial.const(1), _normalized=True)
        return cls(Polynomial.const(x), Polynomial.const(1), _normalized=True)

    @property
    def is_polynomial(self) -> bool:
        return self.den.is_constant

    def as_polynomial(self) -> Polynomial:
        if not self.den.is_constant:
            raise ValueError(f"not a polynomial: {self}")
        return self.num

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    @property
    def is_constant(self) -> bool:
        return self.num.is_constant and self.den.is_constant

    @property
    def constant_value(self):
        return self.num.constant_value / self.den.constant_value

    def variables(self) -> set[str]:
        return self.num.variables() | self.den.variables()

    # -- arithmetic -------------------------------------------------------

    @staticmethod
    def _coerce(x):
        if isinstance(x, RationalFunction):
            return x
        if isinstance(x, Polynomial):
            return RationalFunction.of(x)
        try:
            return RationalFunction.of(Polynomial.const(to_mpq(x)))
        except TypeError:
            return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o.num.is_zero:
            return self
        if self.num.is_zero:
            return o
        if self.den == o.den:
            if self.den.is_constant:
                return RationalFunction(self.num + o.num, self.den, _normalized=True)
            return RationalFunction(self.num + o.num, self.den)
        if o.den.is_constant and self.den.is_constant:
            return RationalFunction(self.num + o.num, Polynomial.const(1), _normalized=True)
        g, da, db = cofactors(self.den, o.den)
        num = self.num * db + o.num * da
        return RationalFunction(num, da * o.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction(-self.num, self.den, _normalized=True)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if self.num.is_zero or o.num.is_zero:
            return RationalFunction.of(0)
        if self.den.is_constant and o.den.is_constant:
            return RationalFunction(self.num * o.num, Polynomial.const(1), _normalized=True)
        # cross-cancel before multiplying
        _, n1, d2 = cofactors(self.num, o.den)
        _, n2, d1 = cofactors(o.num, self.den)
        return RationalFunction(n1 * n2, d1 * d2)

    __rmul__ = __mul__

    def inverse(self) -> "RationalFunction":
        if self.num.is_zero:
            raise ZeroDivisionError("division by the zero polynomial")
        return RationalFunction(self.den, self.num)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        return RationalFunction(self.num ** k, self.den ** k, _normalized=True)

    # -- calculus and evaluation ------------------------------------------

    def diff(self, name: str) -> "RationalFunction":
        if self.den.is_constant:
            return RationalFunction(self.num.diff(name), Polynomial.const(1), _normalized=True)
        dd = self.den.diff(name)
        if dd.is_zero:
            return RationalFunction(self.num.diff(name), self.den)
        return RationalFunction(self.num.diff(name) * self.den - self.num * dd, self.den * self.den)

    def subs(self, mapping: Mapping[str, object]) -> "RationalFunction":
        return RationalFunction(self.num.subs(mapping), self.den.subs(mapping))

    def evaluate(self, point: Mapping[str, object], convert: Callable = None):
        return self.num.evaluate(point, convert) / self.den.evaluate(point, convert)

    # -- protocol ---------------------------------------------------------

    def __eq__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self.num == o.num and self.den == o.den

    def __hash__(self):
        return hash((self.num, self.den))

    def __str__(self):
        if self.den == 1:
            return str(self.num)
        n = str(self.num)
        if len(self.num) > 1:
            n = f"({n})"
        return f"{n}/({self.den})"

    def __repr__(self):
        return f"RationalFunction({str(self)!r})"


def _normalize(num: Polynomial, den: Polynomial):
    if num.is_zero:
        return num, Polynomial.const(1)
    if den.is_constant:
        c = den.constant_value
        return (num.scale(1 / c), Polynomial.const(1)) if c != 1 else (num, den)
    _, num, den = cofactors(num, den)
    lc = den.leading_coefficient()
    if lc != 1:
        num, den = num.scale(1 / lc), den.scale(1 / lc)
    return num, den


def as_rf(x) -> RationalFunction:
    return RationalFunction._coerce(x)


def rsubs(p, mapping) -> RationalFunction:
    """Simultaneously substitute polynomials or rational functions into ``p``."""
    if isinstance(p, RationalFunction):
        return rsubs(p.num, mapping) / rsubs(p.den, mapping)
    touched = sorted(p.variables() & set(mapping))
    if not touched:
        return RationalFunction.of(p)
    vals = {v: as_rf(mapping[v]) for v in touched}
    if all(vals[v].den.is_constant for v in touched):
        return RationalFunction.of(p.subs({v: vals[v].num.scale(1 / vals[v].den.constant_value) for v in touched}))
    # clear denominators: multiply by den_v^deg_v for every substituted variable
    degs = {v: p.degree_in([v]) for v in touched}
    pw: dict = {}

    def power(v, e, part):
        key = (v, e, part)
        if key not in pw:
            base = vals[v].num if part == "n" else vals[v].den
            pw[key] = base ** e
        return pw[key]

    total = Polynomial.const(0)
    for m, c in p.items():
        md = dict(m)
        t = Polynomial({tuple((v, e) for v, e in m if v not in vals): c})
        for v in touched:
            e = md.get(v, 0)
            if e:
                t = t * power(v, e, "n")
            if degs[v] - e and not vals[v].den.is_constant:
                t = t * power(v, degs[v] - e, "d")
            elif degs[v] - e:
                t = t.scale(vals[v].den.constant_value ** (degs[v] - e))
        total = total + t
    den = Polynomial.const(1)
    for v in touched:
        den = den * vals[v].den ** degs[v]
    return RationalFunction(total, den)
