"""Multivariate gcd and square-free splitting, delegated to sympy's sparse rings."""

from __future__ import annotations

from functools import lru_cache

from sympy.polys.domains import QQ
from sympy.polys.orderings import grlex
from sympy.polys.rings import ring

from hamtrio.symcore.poly import Polynomial, var_key


@lru_cache(maxsize=256)
def _ring(names: tuple):
    R, *_ = ring(",".join(names), QQ, grlex)
    return R


def _to_sympy(ps: list[Polynomial]):
    names = sorted(set().union(*(p.variables() for p in ps)), key=var_key)
    R = _ring(tuple(names))
    index = {v: i for i, v in enumerate(names)}
    out = []
    for p in ps:
        d = {}
        for m, c in p.items():
            e = [0] * len(names)
            for v, k in m:
                e[index[v]] = k
            d[tuple(e)] = c
        out.append(R.from_dict(d))
    return R, names, out


def _from_sympy(element, names) -> Polynomial:
    terms = {}
    for e, c in element.items():
        terms[tuple((names[i], k) for i, k in enumerate(e) if k)] = c
    # names sorted by var_key, monomials must be sorted by name
    return Polynomial({tuple(sorted(m)): c for m, c in terms.items()})


def cofactors(a: Polynomial, b: Polynomial):
    """Return ``(h, a/h, b/h)`` with ``h = gcd(a, b)``."""
    if a.is_zero:
        return b, Polynomial.const(0), Polynomial.const(1) if not b.is_zero else Polynomial.const(0)
    if b.is_zero:
        return a, Polynomial.const(1), Polynomial.const(0)
    if a.is_constant or b.is_constant:
        one = Polynomial.const(1)
        return one, a, b
    ca, cb = a.monomial_content(), b.monomial_content()
    if len(a) == 1 or len(b) == 1:
        # a monomial factor can only share a monomial with the other side
        common = dict(ca)
        db = dict(cb)
        common = tuple(sorted((v, min(e, db[v])) for v, e in common.items() if v in db))
        h = Polynomial({common: 1})
        return h, a.div_monomial(common), b.div_monomial(common)
    R, names, (sa, sb) = _to_sympy([a, b])
    h, fa, fb = sa.cofactors(sb)
    return _from_sympy(h, names), _from_sympy(fa, names), _from_sympy(fb, names)


def gcd(a: Polynomial, b: Polynomial) -> Polynomial:
    return cofactors(a, b)[0]


def exact_div(a: Polynomial, b: Polynomial) -> Polynomial:
    if b.is_constant:
        return a.scale(1 / b.constant_value)
    R, names, (sa, sb) = _to_sympy([a, b])
    q, r = sa.div(sb)
    if r:
        raise ValueError("inexact polynomial division")
    return _from_sympy(q, names)


def _linear_split(p: Polynomial):
    """For p = c*v + r linear in some v, return [h, p/h] with h = gcd(c, r); None if no such v.

    With c, r coprime p is irreducible (Gauss), so p/h is irreducible and only
    h needs further splitting.
    """
    for v in sorted(p.variables(), key=var_key):
        if p.degree_in([v]) == 1:
            c = p.diff(v)
            r = p - c * Polynomial.var(v)
            if r.is_zero:
                return None  # v was monomial content
            h = gcd(c, r)
            if h.is_constant:
                return [Polynomial.const(1), p]
            return [h, exact_div(p, h)]
    return None


def sqf_factors(p: Polynomial) -> list[Polynomial]:
    """Distinct square-free factors of ``p`` (monomial content split into variables).

    A polynomial linear in one of its variables splits by one gcd; otherwise
    the square-free decomposition is used, whose parts need not be irreducible.
    """
    mono = p.monomial_content()
    rest = p.div_monomial(mono)
    factors = [Polynomial.var(v) for v, _ in mono]
    if rest.is_constant:
        return factors
    lin = _linear_split(rest.primitive())
    if lin is not None:
        h, q = lin
        for f in ([] if h.is_constant else sqf_factors(h)) + [q]:
            if not any(_same_up_to_scale(f, g) for g in factors):
                factors.append(f)
        return factors
    R, names, (sp,) = _to_sympy([rest])
    _, parts = sp.sqf_list()
    for f, _ in parts:
        factors.append(_from_sympy(f, names))
    return factors


def _same_up_to_scale(a: Polynomial, b: Polynomial) -> bool:
    return a.primitive() == b.primitive()

