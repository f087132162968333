"""Hamiltonianity and compatibility conditions for first-order localizable operators.

A first-order operator is ``g^{ij} D + Gamma^{ij}_k u^k_x + w^i_k u^k_x D^{-1} u^j_x``
with constant tail ``w``; the second-order operator is ``eta^{ij} D^2`` with
constant skew ``eta``. Every check returns a residual polynomial that must
vanish identically in the field variables and in any remaining parameters.
Where the classical statement involves the covariant metric the condition is
multiplied through by contravariant factors, so no inverse is formed.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Iterable, Iterator

from hamtrio.diffgeo import (
    ZERO,
    Christoffel,
    DimensionError,
    Metric,
    SkewForm,
    levi_civita,
    lift,
)
from hamtrio.symcore.linalg import DegenerateMatrixError, det
from hamtrio.symcore.poly import PENCIL_VAR, Polynomial, var_key
from hamtrio.symcore.ratfunc import RationalFunction

log = logging.getLogger(__name__)


# -- operators -------------------------------------------------------------------

@dataclass(frozen=True)
class FirstOrderOperator:
    g: Metric
    gamma_given: Christoffel | None = None  # None means "derive from g"
    w: tuple | None = None
    name: str = ""

    def __post_init__(self):
        n = self.g.n
        w = self.w
        if w is None:
            w = tuple(tuple(ZERO for _ in range(n)) for _ in range(n))
        w = tuple(tuple(lift(x) for x in r) for r in w)
        if len(w) != n or any(len(r) != n for r in w):
            raise DimensionError("tail matrix must be n x n")
        for r in w:
            for x in r:
                if not isinstance(x, (Polynomial, RationalFunction)) or any(
                        var_key(v)[0] == 0 for v in x.variables()):
                    raise ValueError(f"tail entries must be constant in the field variables, got {x}")
        object.__setattr__(self, "w", w)
        if self.gamma_given is not None and self.gamma_given.n != n:
            raise DimensionError("Christoffel symbols and metric disagree on n")

    @property
    def n(self) -> int:
        return self.g.n

    @property
    def derived(self) -> bool:
        return self.gamma_given is None

    @cached_property
    def gamma(self) -> Christoffel:
        if self.gamma_given is not None:
            return self.gamma_given
        return levi_civita(self.g)

    @property
    def is_local(self) -> bool:
        return all(x.is_zero for r in self.w for x in r)

    def variables(self) -> set[str]:
        out = set()
        for r in self.g.entries:
            for x in r:
                out |= x.variables()
        for x in self.gamma.symbols:
            for r in x:
                for y in r:
                    out |= y.variables()
        for r in self.w:
            for x in r:
                out |= x.variables()
        return out

    def subs(self, mapping) -> "FirstOrderOperator":
        w = tuple(tuple(x.subs(mapping) for x in r) for r in self.w)
        gamma = None if self.derived else self.gamma_given.subs(mapping)
        return FirstOrderOperator(self.g.subs(mapping), gamma, w, self.name)


@dataclass(frozen=True)
class SecondOrderConstantOperator:
    eta: SkewForm
    name: str = ""

    @property
    def n(self) -> int:
        return self.eta.n


# -- reports ---------------------------------------------------------------------

@dataclass(frozen=True)
class ConditionResult:
    name: str
    passed: bool
    indices: tuple | None = None  # 1-based indices of the first failing component
    residual: object = None
    detail: str = ""

    def as_dict(self) -> dict:
        d = {"condition": self.name, "passed": self.passed}
        if not self.passed:
            d["indices"] = list(self.indices) if self.indices else None
            d["residual"] = str(self.residual)
        if self.detail:
            d["detail"] = self.detail
        return d


@dataclass
class ConditionReport:
    conditions: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    @property
    def ok(self) -> bool:
        """Passed and carrying no warning flag."""
        return self.passed and not self.flags

    def first_failure(self) -> ConditionResult | None:
        return next((c for c in self.conditions if not c.passed), None)

    def __getitem__(self, name: str) -> ConditionResult:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def names(self) -> list[str]:
        return [c.name for c in self.conditions]

    def extend(self, other: "ConditionReport", prefix: str = "") -> None:
        for c in other.conditions:
            self.conditions.append(ConditionResult(prefix + c.name, c.passed, c.indices, c.residual, c.detail))
        self.flags.extend(prefix + f for f in other.flags)

    def as_dict(self) -> dict:
        return {"passed": self.passed, "flags": list(self.flags),
                "conditions": [c.as_dict() for c in self.conditions]}

    def summary(self) -> str:
        lines = []
        for c in self.conditions:
            if c.passed:
                lines.append(f"  pass  {c.name}")
            else:
                lines.append(f"  FAIL  {c.name} at {c.indices}: {c.residual}")
        for f in self.flags:
            lines.append(f"  warn  {f}")
        return "\n".join(lines)


def _first_nonzero(name: str, residuals: Iterable, detail: str = "") -> ConditionResult:
    for idx, r in residuals:
        r = _numerator(r)
        if not r.is_zero:
            return ConditionResult(name, False, tuple(i + 1 for i in idx), r, detail)
    return ConditionResult(name, True, detail=detail)


def _numerator(r):
    if isinstance(r, RationalFunction):
        return r.num
    return lift(r)


# -- residual generators ---------------------------------------------------------
# each yields (0-based index tuple, residual) in a fixed order

def _uvars(n):
    return [f"u{i}" for i in range(1, n + 1)]


def gamma_symmetry_residuals(g: Metric, G: Christoffel) -> Iterator:
    """g^{is} Gamma^{jk}_s - g^{js} Gamma^{ik}_s."""
    n = g.n
    for i, j, k in product(range(n), repeat=3):
        if i >= j:
            continue
        acc = ZERO
        for s in range(n):
            acc = acc + g[i, s] * G[j, k, s] - g[j, s] * G[i, k, s]
        yield (i, j, k), acc


def metric_compatibility_residuals(g: Metric, G: Christoffel) -> Iterator:
    """d_k g^{ij} - Gamma^{ij}_k - Gamma^{ji}_k."""
    n = g.n
    u = _uvars(n)
    for i, j, k in product(range(n), repeat=3):
        if i > j:
            continue
        yield (i, j, k), g[i, j].diff(u[k]) - G[i, j, k] - G[j, i, k]


def tail_symmetry_residuals(g: Metric, w) -> Iterator:
    """g^{is} w^j_s - g^{js} w^i_s."""
    n = g.n
    for i, j in product(range(n), repeat=2):
        if i >= j:
            continue
        acc = ZERO
        for s in range(n):
            acc = acc + g[i, s] * w[j][s] - g[j, s] * w[i][s]
        yield (i, j), acc


def tail_closure_residuals(g: Metric, G: Christoffel, w) -> Iterator:
    """Antisymmetrized covariant derivative of w, raised by g^{bi} g^{ck}.

    For constant w, nabla_i w^j_k - nabla_k w^j_i = 0 becomes
    g^{bi} Gamma^{cj}_s w^s_i - g^{ck} Gamma^{bj}_s w^s_k = 0.
    """
    n = g.n
    Gw = {}
    for c, j, i in product(range(n), repeat=3):
        acc = ZERO
        for s in range(n):
            if not w[s][i].is_zero:
                acc = acc + G[c, j, s] * w[s][i]
        Gw[c, j, i] = acc  # Gamma^{cj}_s w^s_i
    for b, c, j in product(range(n), repeat=3):
        if b >= c:
            continue
        acc = ZERO
        for i in range(n):
            acc = acc + g[b, i] * Gw[c, j, i] - g[c, i] * Gw[b, j, i]
        yield (b, c, j), acc


def tail_curvature_rhs(w, j, k, s, l):
    """w^j_s d^k_l - w^k_s d^j_l - w^j_l d^k_s + w^k_l d^j_s."""
    acc = ZERO
    if k == l:
        acc = acc + w[j][s]
    if j == l:
        acc = acc - w[k][s]
    if k == s:
        acc = acc - w[j][l]
    if j == s:
        acc = acc + w[k][l]
    return acc


def curvature_tail_residuals(g: Metric, G: Christoffel, w) -> Iterator:
    """g^{as}(R^{jk}_{sl} - rhs^{jk}_{sl}) with the curvature written out, free of g_{st}.

    Equals sum_s g^{as}(d_s Gamma^{jk}_l - d_l Gamma^{jk}_s - rhs) - X^{ajk}_l
    where X^{ajk}_l = Gamma^{aj}_m Gamma^{mk}_l - Gamma^{ak}_m Gamma^{mj}_l.
    """
    n = g.n
    u = _uvars(n)
    dG = {}
    for j, k, l, s in product(range(n), repeat=4):
        dG[j, k, l, s] = G[j, k, l].diff(u[s])
    for a, j, k, l in product(range(n), repeat=4):
        if j >= k:
            continue
        acc = ZERO
        for s in range(n):
            if g[a, s].is_zero:
                continue
            t = dG[j, k, l, s] - dG[j, k, s, l] - tail_curvature_rhs(w, j, k, s, l)
            if not t.is_zero:
                acc = acc + g[a, s] * t
        for m in range(n):
            acc = acc - G[a, j, m] * G[m, k, l] + G[a, k, m] * G[m, j, l]
        yield (a, j, k, l), acc


def tail_eta_residuals(w, eta: SkewForm) -> Iterator:
    """w^i_l eta^{lk} + w^k_l eta^{li}."""
    n = eta.n
    e = eta.eta
    for i, k in product(range(n), repeat=2):
        if i > k:
            continue
        acc = ZERO
        for l in range(n):
            if e[l][k]:
                acc = acc + w[i][l] * e[l][k]
            if e[l][i]:
                acc = acc + w[k][l] * e[l][i]
        yield (i, k), acc


def cocycle_residuals(G: Christoffel, eta: SkewForm) -> Iterator:
    """Gamma^{ij}_l eta^{lk} + Gamma^{kj}_l eta^{li}."""
    n = eta.n
    e = eta.eta
    for i, j, k in product(range(n), repeat=3):
        acc = ZERO
        for l in range(n):
            if e[l][k]:
                acc = acc + G[i, j, l] * e[l][k]
            if e[l][i]:
                acc = acc + G[k, j, l] * e[l][i]
        yield (i, j, k), acc


def cyclic_residuals(G: Christoffel, eta: SkewForm) -> Iterator:
    """Gamma^{ki}_l eta^{lj} + Gamma^{ij}_l eta^{lk} + Gamma^{jk}_l eta^{li}."""
    n = eta.n
    e = eta.eta
    for i, j, k in product(range(n), repeat=3):
        acc = ZERO
        for l in range(n):
            if e[l][j]:
                acc = acc + G[k, i, l] * e[l][j]
            if e[l][k]:
                acc = acc + G[i, j, l] * e[l][k]
            if e[l][i]:
                acc = acc + G[j, k, l] * e[l][i]
        yield (i, j, k), acc


def associativity_residuals(G: Christoffel) -> Iterator:
    """Gamma^{sj}_p Gamma^{ir}_s - Gamma^{sr}_p Gamma^{ij}_s."""
    n = G.n
    for i, j, r, p in product(range(n), repeat=4):
        if j >= r:
            continue  # skew in (j, r)
        acc = ZERO
        for s in range(n):
            a, b = G[s, j, p], G[i, r, s]
            if not a.is_zero and not b.is_zero:
                acc = acc + a * b
            c, d = G[s, r, p], G[i, j, s]
            if not c.is_zero and not d.is_zero:
                acc = acc - c * d
        yield (i, j, r, p), acc


def affine_residuals(G: Christoffel, w) -> Iterator:
    """d_s Gamma^{kj}_l + d^j_s w^k_l + w^j_s d^k_l."""
    n = G.n
    u = _uvars(n)
    for k, j, l, s in product(range(n), repeat=4):
        acc = G[k, j, l].diff(u[s])
        if j == s:
            acc = acc + w[k][l]
        if k == l:
            acc = acc + w[j][s]
        yield (k, j, l, s), acc


# -- non-degeneracy ----------------------------------------------------------------

def _sample_point(names, rng) -> dict:
    return {v: Fraction(rng.randint(-99, 99), rng.randint(1, 99)) for v in names}


def nondegenerate(g: Metric, tries: int = 4, seed: int = 0) -> bool:
    """True iff det g is not the zero rational function.

    Exact evaluation at random rational points certifies non-degeneracy. Only
    if every sample vanishes is the determinant expanded symbolically.
    """
    rng = random.Random(seed)
    names = set()
    for r in g.entries:
        for x in r:
            names |= x.variables()
    names = sorted(names, key=var_key)
    from gmpy2 import mpq
    for _ in range(tries):
        pt = {k: mpq(v.numerator, v.denominator) for k, v in _sample_point(names, rng).items()}
        try:
            rows = [[_eval_exact(x, pt) for x in r] for r in g.entries]
        except ZeroDivisionError:
            continue
        if not det(rows).is_zero:
            return True
    return not g.det.is_zero


def _eval_exact(x, pt):
    if isinstance(x, RationalFunction):
        d = x.den.evaluate(pt)
        if not d:
            raise ZeroDivisionError
        return x.num.evaluate(pt) / d
    return x.evaluate(pt)


def _require_nondegenerate(g: Metric, what: str = "degenerate metric"):
    if not nondegenerate(g):
        raise DegenerateMatrixError(g.det, what)


# -- operations -------------------------------------------------------------------

HAMILTONIAN_CONDITIONS = ("gamma_symmetry", "metric_compatibility", "tail_symmetry",
                          "tail_closure", "curvature_tail")
COMPAT_CONDITIONS = ("tail_constant", "tail_eta_symmetry", "cocycle", "cyclic",
                     "associativity", "affine_gamma", "affine_structure")
CF_CONDITIONS = ("cocycle", "cyclic", "associativity")


def hamiltonian_check(P: FirstOrderOperator, check_degeneracy: bool = True) -> ConditionReport:
    """Hamiltonianity of a localizable first-order operator as identities in u and parameters."""
    if check_degeneracy:
        _require_nondegenerate(P.g)
    g, G, w = P.g, P.gamma, P.w
    rep = ConditionReport()
    rep.conditions.append(_first_nonzero("gamma_symmetry", gamma_symmetry_residuals(g, G)))
    rep.conditions.append(_first_nonzero("metric_compatibility", metric_compatibility_residuals(g, G)))
    rep.conditions.append(_first_nonzero("tail_symmetry", tail_symmetry_residuals(g, w)))
    rep.conditions.append(_first_nonzero("tail_closure", tail_closure_residuals(g, G, w)))
    rep.conditions.append(_first_nonzero("curvature_tail", curvature_tail_residuals(g, G, w)))
    return rep


def _check_dims(P, R):
    if P.n != R.n:
        raise DimensionError(f"operators have n={P.n} and n={R.n}")


def compat_with_R2(P: FirstOrderOperator, R: SecondOrderConstantOperator,
                   enforce_hamiltonian: bool = False) -> ConditionReport:
    """Compatibility of P with eta D^2.

    P's Hamiltonianity is checked first; a failure aborts when
    ``enforce_hamiltonian`` is set, otherwise it is logged and flagged.
    """
    _check_dims(P, R)
    eta = R.eta
    rep = ConditionReport()
    ham = hamiltonian_check(P)
    if not ham.passed:
        bad = ham.first_failure()
        msg = f"not_hamiltonian ({bad.name})"
        if enforce_hamiltonian:
            raise ValueError(f"first-order operator is not Hamiltonian: {bad.name}")
        log.warning("compatibility checked on a non-Hamiltonian operator: %s", bad.name)
        rep.flags.append(msg)
    G, w = P.gamma, P.w
    rep.conditions.append(ConditionResult("tail_constant", True))  # enforced by FirstOrderOperator
    rep.conditions.append(_first_nonzero("tail_eta_symmetry", tail_eta_residuals(w, eta)))
    rep.conditions.append(_first_nonzero("cocycle", cocycle_residuals(G, eta)))
    rep.conditions.append(_first_nonzero("cyclic", cyclic_residuals(G, eta)))
    rep.conditions.append(_first_nonzero("associativity", associativity_residuals(G)))
    aff = _first_nonzero("affine_gamma", affine_residuals(G, w))
    rep.conditions.append(aff)
    rep.conditions.append(_affine_structure(G, w, aff.passed))
    return rep


def _affine_structure(G: Christoffel, w, affine_ok: bool) -> ConditionResult:
    """Gamma equals gamma_from_bw(b, w) with b = Gamma at u = 0."""
    if not affine_ok:
        return ConditionResult("affine_structure", False, None, "not affine in u",
                               "derivative condition failed")
    fv = {f"u{i}" for i in range(1, G.n + 1)}
    # coefficients may be rational in parameters, but not in the field variables
    if any(not isinstance(x, Polynomial) and x.den.variables() & fv for p in G.symbols for r in p for x in r):
        return ConditionResult("affine_structure", False, None, "Christoffel symbols rational in u")
    b = extract_b(G)
    model = gamma_from_bw(b, w)
    n = G.n
    return _first_nonzero("affine_structure",
                          (((k, j, l), G[k, j, l] - model[k, j, l]) for k, j, l in product(range(n), repeat=3)))


def extract_b(G: Christoffel):
    n = G.n
    zero = {f"u{i}": 0 for i in range(1, n + 1)}
    return [[[G[k, j, l].subs(zero) for l in range(n)] for j in range(n)] for k in range(n)]


def cf_algebra_check(G: Christoffel, eta: SkewForm) -> ConditionReport:
    """Cyclic Frobenius algebra axioms for the product with structure 'constants' Gamma."""
    if G.n != eta.n:
        raise DimensionError("Christoffel symbols and eta disagree on n")
    rep = ConditionReport()
    rep.conditions.append(_first_nonzero("cocycle", cocycle_residuals(G, eta)))
    rep.conditions.append(_first_nonzero("cyclic", cyclic_residuals(G, eta)))
    rep.conditions.append(_first_nonzero("associativity", associativity_residuals(G)))
    return rep


def gamma_from_bw(b, w) -> Christoffel:
    """Gamma^{kj}_l = -w^k_l u^j - w^j_s u^s d^k_l + b^{kj}_l.

    ``b`` is an n x n x n nested sequence (b[k][j][l] = b^{kj}_l) of constants.
    """
    n = len(w)
    u = [Polynomial.var(f"u{i}") for i in range(1, n + 1)]
    w = [[lift(x) for x in r] for r in w]
    wu = [sum((w[j][s] * u[s] for s in range(n)), ZERO) for j in range(n)]  # w^j_s u^s
    out = [[[ZERO] * n for _ in range(n)] for _ in range(n)]
    for k, j, l in product(range(n), repeat=3):
        val = lift(b[k][j][l]) - w[k][l] * u[j]
        if k == l:
            val = val - wu[j]
        out[k][j][l] = val
    return Christoffel(out)


def pencil(P: FirstOrderOperator, Q: FirstOrderOperator, lam: str = PENCIL_VAR) -> FirstOrderOperator:
    """The formal pencil P + lam Q with lam a fresh parameter."""
    if P.n != Q.n:
        raise DimensionError(f"operators have n={P.n} and n={Q.n}")
    L = Polynomial.var(lam)
    n = P.n
    g = Metric(tuple(tuple(P.g[i, j] + L * Q.g[i, j] for j in range(n)) for i in range(n)))
    G = P.gamma + Q.gamma.scale(L)
    w = tuple(tuple(P.w[i][j] + L * Q.w[i][j] for j in range(n)) for i in range(n))
    return FirstOrderOperator(g, G, w, f"{P.name}+{lam}*{Q.name}")


class DegeneratePencilError(DegenerateMatrixError):
    pass


def pencil_compat(P: FirstOrderOperator, Q: FirstOrderOperator) -> ConditionReport:
    """Compatibility of two Hamiltonian operators as Hamiltonianity of P + lam Q for all lam."""
    for X in (P, Q):
        if PENCIL_VAR in X.variables():
            raise ValueError(f"the pencil variable {PENCIL_VAR!r} is reserved")
    pen = pencil(P, Q)
    if not nondegenerate(pen.g):
        raise DegeneratePencilError(pen.g.det, "degenerate pencil")
    rep = ConditionReport()
    for label, X in (("P", P), ("Q", Q)):
        h = hamiltonian_check(X, check_degeneracy=False)
        if not h.passed:
            rep.flags.append(f"{label} not_hamiltonian ({h.first_failure().name})")
    rep.extend(hamiltonian_check(pen, check_degeneracy=False), "pencil:")
    return rep


def trio_verify(P: FirstOrderOperator, Q: FirstOrderOperator,
                R: SecondOrderConstantOperator) -> ConditionReport:
    if not (P.n == Q.n == R.n):
        raise DimensionError("trio members disagree on n")
    rep = ConditionReport()
    rep.extend(hamiltonian_check(P), "P.hamiltonian:")
    rep.extend(hamiltonian_check(Q), "Q.hamiltonian:")
    rep.extend(compat_with_R2(P, R), "P.R2:")
    rep.extend(compat_with_R2(Q, R), "Q.R2:")
    rep.extend(pencil_compat(P, Q), "P.Q:")
    return rep
