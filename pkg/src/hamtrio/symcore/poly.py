"""Sparse multivariate polynomials with exact rational coefficients.

A monomial is a tuple of ``(name, exponent)`` pairs sorted by name, the
constant monomial is ``()``. Coefficients are ``gmpy2.mpq``. Variables are
identified by name only, so polynomials built over different variable tables
combine freely; :class:`~hamtrio.symcore.vars.VarTable` decides which names
count as field variables.
"""

from __future__ import annotations

import re
from functools import lru_cache
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, Iterator, Mapping

import gmpy2
from gmpy2 import mpq

Monomial = tuple  # tuple[tuple[str, int], ...]

_ONE_MONO: Monomial = ()
_SPLIT_DIGITS = re.compile(r"(\d+)")
_FIELD_VAR = re.compile(r"u(\d+)$")
PENCIL_VAR = "lam"


def to_mpq(c) -> mpq:
    if isinstance(c, mpq):
        return c
    if isinstance(c, int):
        return mpq(c)
    if isinstance(c, Fraction):
        return mpq(c.numerator, c.denominator)
    if isinstance(c, Rational):
        return mpq(int(c.numerator), int(c.denominator))
    raise TypeError(f"not an exact rational: {c!r}")


@lru_cache(maxsize=None)
def var_key(name: str):
    """Sort key realising the variable order u1 < u2 < ... < params < lam."""
    m = _FIELD_VAR.match(name)
    if m:
        return (0, int(m.group(1)), ())
    if name == PENCIL_VAR:
        return (2, 0, ())
    parts = _SPLIT_DIGITS.split(name)
    return (1, 0, tuple(int(p) if i % 2 else p for i, p in enumerate(parts)))


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


def mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


@lru_cache(maxsize=1 << 18)
def mono_key(m: Monomial):
    """Ascending sort by this key lists monomials in decreasing grlex order."""
    return (-mono_degree(m), tuple(sorted((var_key(v), -e) for v, e in m)))


@lru_cache(maxsize=1 << 18)
def mono_str(m: Monomial) -> str:
    parts = []
    for v, e in sorted(m, key=lambda t: var_key(t[0])):
        parts.append(v if e == 1 else f"{v}^{e}")
    return "*".join(parts)


def _coeff_str(c: mpq) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


class Polynomial:
    """Immutable polynomial; equality is structural on the term map."""

    __slots__ = ("_terms", "_hash", "_str")

    def __init__(self, terms: Mapping[Monomial, object] | None = None):
        clean = {}
        if terms:
            for m, c in terms.items():
                c = to_mpq(c)
                if c:
                    clean[m] = c
        self._terms = clean
        self._hash = None
        self._str = None

    @classmethod
    def _raw(cls, terms: dict) -> "Polynomial":
        # trusted constructor: mpq values, no zeros
        p = object.__new__(cls)
        p._terms = terms
        p._hash = None
        p._str = None
        return p

    @classmethod
    def const(cls, c) -> "Polynomial":
        c = to_mpq(c)
        return cls._raw({_ONE_MONO: c} if c else {})

    @classmethod
    def var(cls, name: str) -> "Polynomial":
        return cls._raw({((name, 1),): mpq(1)})

    # -- inspection -------------------------------------------------------

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and _ONE_MONO in self._terms)

    @property
    def constant_value(self) -> mpq:
        if not self.is_constant:
            raise ValueError(f"not a constant: {self}")
        return self._terms.get(_ONE_MONO, mpq(0))

    def constant_term(self) -> mpq:
        return self._terms.get(_ONE_MONO, mpq(0))

    def variables(self) -> set[str]:
        out = set()
        for m in self._terms:
            for v, _ in m:
                out.add(v)
        return out

    def degree(self) -> int:
        return max((mono_degree(m) for m in self._terms), default=-1)

    def degree_in(self, names: Iterable[str]) -> int:
        names = set(names)
        return max((sum(e for v, e in m if v in names) for m in self._terms), default=-1)

    def sorted_terms(self) -> list:
        return sorted(self._terms.items(), key=lambda t: mono_key(t[0]))

    def leading_term(self):
        if not self._terms:
            raise ValueError("zero polynomial has no leading term")
        return min(self._terms.items(), key=lambda t: mono_key(t[0]))

    def leading_coefficient(self) -> mpq:
        return self.leading_term()[1] if self._terms else mpq(0)

    # -- arithmetic -------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Polynomial):
            return other
        try:
            return Polynomial.const(other)
        except TypeError:
            return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not other._terms:
            return self
        if not self._terms:
            return other
        t = dict(self._terms)
        for m, c in other._terms.items():
            s = t.get(m)
            if s is None:
                t[m] = c
            else:
                s = s + c
                if s:
                    t[m] = s
                else:
                    del t[m]
        return Polynomial._raw(t)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def scale(self, c) -> "Polynomial":
        c = to_mpq(c)
        if not c:
            return Polynomial._raw({})
        if c == 1:
            return self
        return Polynomial._raw({m: v * c for m, v in self._terms.items()})

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        a, b = self._terms, other._terms
        if not a or not b:
            return Polynomial._raw({})
        if len(a) < len(b):
            a, b = b, a
        out: dict = {}
        for m2, c2 in b.items():
            if not m2:
                for m1, c1 in a.items():
                    s = out.get(m1)
                    out[m1] = c1 * c2 if s is None else s + c1 * c2
                continue
            for m1, c1 in a.items():
                if m1:
                    d = dict(m1)
                    for v, e in m2:
                        d[v] = d.get(v, 0) + e
                    m = tuple(sorted(d.items()))
                else:
                    m = m2
                s = out.get(m)
                out[m] = c1 * c2 if s is None else s + c1 * c2
        return Polynomial._raw({m: c for m, c in out.items() if c})

    def __rmul__(self, other):
        return self.__mul__(other)

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer exponents")
        result = Polynomial.const(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __truediv__(self, other):
        if isinstance(other, Polynomial):
            if other.is_constant and not other.is_zero:
                return self.scale(1 / other.constant_value)
            from hamtrio.symcore.ratfunc import RationalFunction
            return RationalFunction(self, other)
        c = to_mpq(other)
        if not c:
            raise ZeroDivisionError("division by zero")
        return self.scale(1 / c)

    def __rtruediv__(self, other):
        from hamtrio.symcore.ratfunc import RationalFunction
        return RationalFunction(Polynomial.const(other), self)

    # -- calculus and substitution ----------------------------------------

    def diff(self, name: str) -> "Polynomial":
        out: dict = {}
        for m, c in self._terms.items():
            for i, (v, e) in enumerate(m):
                if v == name:
                    if e == 1:
                        nm = m[:i] + m[i + 1:]
                    else:
                        nm = m[:i] + ((v, e - 1),) + m[i + 1:]
                    s = out.get(nm)
                    out[nm] = c * e if s is None else s + c * e
                    break
        return Polynomial._raw({m: c for m, c in out.items() if c})

    def subs(self, mapping: Mapping[str, object]) -> "Polynomial":
        """Substitute polynomials (or numbers) for variables."""
        if not mapping:
            return self
        touched = self.variables() & set(mapping)
        if not touched:
            return self
        vals = {v: mapping[v] if isinstance(mapping[v], Polynomial) else Polynomial.const(mapping[v])
                for v in touched}
        powers: dict = {}

        def power(v, e):
            key = (v, e)
            p = powers.get(key)
            if p is None:
                p = vals[v] if e == 1 else power(v, e - 1) * vals[v]
                powers[key] = p
            return p

        acc: dict = {}
        grouped: dict = {}
        for m, c in self._terms.items():
            keep = tuple((v, e) for v, e in m if v not in touched)
            repl = tuple((v, e) for v, e in m if v in touched)
            if not repl:
                s = acc.get(keep)
                acc[keep] = c if s is None else s + c
                continue
            grouped.setdefault(repl, []).append((keep, c))
        result = Polynomial._raw({m: c for m, c in acc.items() if c})
        for repl, rest in grouped.items():
            factor = Polynomial.const(1)
            for v, e in repl:
                factor = factor * power(v, e)
            result = result + factor * Polynomial(dict_sum(rest))
        return result

    def evaluate(self, point: Mapping[str, object], convert: Callable = None):
        """Evaluate at a point; ``convert`` maps coefficients into the target number type."""
        conv = convert or (lambda c: c)
        total = 0
        for m, c in self._terms.items():
            t = conv(c)
            for v, e in m:
                t = t * point[v] ** e
            total = total + t
        return total if self._terms else conv(mpq(0))

    def split_by(self, names: Iterable[str]) -> dict:
        """Coefficients of each monomial in ``names``; the other variables stay in the coefficients."""
        names = set(names)
        groups: dict = {}
        for m, c in self._terms.items():
            inner = tuple((v, e) for v, e in m if v in names)
            outer = tuple((v, e) for v, e in m if v not in names)
            groups.setdefault(inner, {})[outer] = c
        return {k: Polynomial._raw(v) for k, v in groups.items()}

    def coefficient(self, mono: Monomial) -> mpq:
        return self._terms.get(mono, mpq(0))

    def monomial_content(self) -> Monomial:
        """Largest monomial dividing every term."""
        it = iter(self._terms)
        try:
            first = dict(next(it))
        except StopIteration:
            return ()
        for m in it:
            d = dict(m)
            first = {v: min(e, d[v]) for v, e in first.items() if v in d}
            if not first:
                break
        return tuple(sorted(first.items()))

    def div_monomial(self, mono: Monomial) -> "Polynomial":
        if not mono:
            return self
        dm = dict(mono)
        out = {}
        for m, c in self._terms.items():
            d = dict(m)
            for v, e in dm.items():
                d[v] -= e
                if d[v] < 0:
                    raise ValueError("monomial does not divide")
            out[tuple(sorted((v, e) for v, e in d.items() if e))] = c
        return Polynomial._raw(out)

    def primitive(self) -> "Polynomial":
        """Scale so coefficients are coprime integers and the leading one is positive."""
        if not self._terms:
            return self
        den = 1
        for c in self._terms.values():
            den = gmpy2.lcm(den, c.denominator)
        num = 0
        for c in self._terms.values():
            num = gmpy2.gcd(num, c.numerator * (den // c.denominator))
        scale = mpq(den, num)
        if self.leading_coefficient() < 0:
            scale = -scale
        return self.scale(scale)

    def monic(self) -> "Polynomial":
        if not self._terms:
            return self
        return self.scale(1 / self.leading_coefficient())

    # -- protocol ---------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self._terms == other._terms
        try:
            return self._terms == Polynomial.const(other)._terms
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self._terms)

    def __iter__(self) -> Iterator:
        return iter(self._terms.items())

    def __str__(self):
        if self._str is None:
            self._str = self._format()
        return self._str

    def _format(self) -> str:
        if not self._terms:
            return "0"
        out = []
        for m, c in self.sorted_terms():
            neg = c < 0
            a = -c if neg else c
            ms = mono_str(m)
            if not ms:
                body = _coeff_str(a)
            elif a == 1:
                body = ms
            else:
                body = f"{_coeff_str(a)}*{ms}"
            if not out:
                out.append(f"-{body}" if neg else body)
            else:
                out.append(f"- {body}" if neg else f"+ {body}")
        return " ".join(out)

    def __repr__(self):
        return f"Polynomial({str(self)!r})"


def dict_sum(pairs) -> dict:
    out: dict = {}
    for m, c in pairs:
        s = out.get(m)
        out[m] = c if s is None else s + c
    return {m: c for m, c in out.items() if c}


ZERO = Polynomial._raw({})
ONE = Polynomial.const(1)


def var(name: str) -> Polynomial:
    return Polynomial.var(name)


def const(c) -> Polynomial:
    return Polynomial.const(c)
