"""Tensor calculus for contravariant metrics and their connections.

Index convention: ``Christoffel.symbols[i][j][k]`` is Gamma^{ij}_k,
``CurvatureTensor.components[i][j][k][h]`` is R^{ij}_{kh}, all 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Sequence

from gmpy2 import mpq

from hamtrio.symcore.linalg import DegenerateMatrixError, det, matrix_inverse
from hamtrio.symcore.poly import Polynomial, to_mpq
from hamtrio.symcore.ratfunc import RationalFunction
from hamtrio.symcore.vars import field_var_names

CONTRAVARIANT = "contravariant"
COVARIANT = "covariant"


def lift(x):
    """Numbers become constant polynomials; polynomial-valued rational functions collapse."""
    if isinstance(x, RationalFunction):
        return x.as_polynomial() if x.is_polynomial else x
    if isinstance(x, Polynomial):
        return x
    return Polynomial.const(x)


def is_zero(x) -> bool:
    return x.is_zero


ZERO = Polynomial.const(0)


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class Metric:
    entries: tuple
    variance: str = CONTRAVARIANT

    def __post_init__(self):
        rows = tuple(tuple(lift(x) for x in r) for r in self.entries)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise DimensionError("metric must be square")
        for i in range(n):
            for j in range(i + 1, n):
                if rows[i][j] != rows[j][i]:
                    raise ValueError(f"metric is not symmetric at ({i + 1},{j + 1})")
        if self.variance not in (CONTRAVARIANT, COVARIANT):
            raise ValueError(f"unknown variance {self.variance!r}")
        object.__setattr__(self, "entries", rows)

    @property
    def n(self) -> int:
        return len(self.entries)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    @cached_property
    def det(self):
        return det(self.entries)

    @cached_property
    def inverse_entries(self):
        try:
            return matrix_inverse(self.entries)
        except DegenerateMatrixError as e:
            raise DegenerateMatrixError(e.det, "degenerate metric") from None

    def inverse(self) -> "Metric":
        other = COVARIANT if self.variance == CONTRAVARIANT else CONTRAVARIANT
        return Metric(self.inverse_entries, other)

    def is_polynomial(self) -> bool:
        return all(isinstance(x, Polynomial) for r in self.entries for x in r)

    def subs(self, mapping) -> "Metric":
        return Metric(tuple(tuple(x.subs(mapping) for x in r) for r in self.entries), self.variance)

    @property
    def field_vars(self):
        return field_var_names(self.n)


@dataclass(frozen=True)
class Christoffel:
    symbols: tuple

    def __post_init__(self):
        s = tuple(tuple(tuple(lift(x) for x in row) for row in plane) for plane in self.symbols)
        n = len(s)
        if any(len(p) != n or any(len(r) != n for r in p) for p in s):
            raise DimensionError("Christoffel array must be n x n x n")
        object.__setattr__(self, "symbols", s)

    @classmethod
    def zero(cls, n: int) -> "Christoffel":
        return cls(tuple(tuple(tuple(ZERO for _ in range(n)) for _ in range(n)) for _ in range(n)))

    @classmethod
    def from_entries(cls, n: int, entries: dict) -> "Christoffel":
        """``entries`` maps 0-based (i, j, k) to Gamma^{ij}_k; omitted entries are zero."""
        arr = [[[ZERO] * n for _ in range(n)] for _ in range(n)]
        for (i, j, k), v in entries.items():
            arr[i][j][k] = lift(v)
        return cls(arr)

    @property
    def n(self) -> int:
        return len(self.symbols)

    def __getitem__(self, ijk):
        i, j, k = ijk
        return self.symbols[i][j][k]

    def nonzero(self) -> dict:
        return {(i, j, k): x for i, j, k in product(range(self.n), repeat=3)
                if not (x := self.symbols[i][j][k]).is_zero}

    def subs(self, mapping) -> "Christoffel":
        return Christoffel(tuple(tuple(tuple(x.subs(mapping) for x in r) for r in p) for p in self.symbols))

    def __add__(self, other: "Christoffel") -> "Christoffel":
        return Christoffel(tuple(tuple(tuple(a + b for a, b in zip(r1, r2)) for r1, r2 in zip(p1, p2))
                                 for p1, p2 in zip(self.symbols, other.symbols)))

    def scale(self, c) -> "Christoffel":
        return Christoffel(tuple(tuple(tuple(x * c for x in r) for r in p) for p in self.symbols))


@dataclass(frozen=True)
class CurvatureTensor:
    components: tuple

    @property
    def n(self) -> int:
        return len(self.components)

    def __getitem__(self, ijkh):
        i, j, k, h = ijkh
        return self.components[i][j][k][h]

    def nonzero(self) -> dict:
        n = self.n
        return {idx: x for idx in product(range(n), repeat=4) if not (x := self[idx]).is_zero}

    def independent_nonzero(self) -> dict:
        """Nonzero components with i < j and k < h (the tensor is skew in each pair)."""
        return {(i, j, k, h): x for (i, j, k, h), x in self.nonzero().items() if i < j and k < h}

    @property
    def is_zero(self) -> bool:
        return not self.nonzero()


@dataclass(frozen=True)
class SkewForm:
    """Constant skew non-degenerate matrix ``eta^{ij}``; ``eta_inv`` holds ``eta_{ij}``."""

    eta: tuple

    def __post_init__(self):
        e = tuple(tuple(to_mpq(_const(x)) for x in r) for r in self.eta)
        n = len(e)
        if any(len(r) != n for r in e):
            raise DimensionError("eta must be square")
        for i in range(n):
            for j in range(n):
                if e[i][j] != -e[j][i]:
                    raise ValueError(f"eta is not skew at ({i + 1},{j + 1})")
        if n % 2:
            raise DimensionError("a non-degenerate skew form needs even dimension")
        object.__setattr__(self, "eta", e)
        d = det(e)
        if d.is_zero:
            raise DegenerateMatrixError(d, "degenerate skew form")
        inv = matrix_inverse(e)
        object.__setattr__(self, "_inv", tuple(tuple(x.constant_value for x in r) for r in inv))

    @property
    def n(self) -> int:
        return len(self.eta)

    @property
    def eta_inv(self):
        return self._inv

    def scaled(self, c) -> "SkewForm":
        c = to_mpq(c)
        return SkewForm(tuple(tuple(x * c for x in r) for r in self.eta))

    @classmethod
    def standard(cls, n: int) -> "SkewForm":
        """Block diagonal [[0, 1], [-1, 0]] blocks."""
        e = [[0] * n for _ in range(n)]
        for b in range(0, n, 2):
            e[b][b + 1], e[b + 1][b] = 1, -1
        return cls(e)


def _const(x):
    if isinstance(x, Polynomial):
        return x.constant_value
    if isinstance(x, RationalFunction):
        return x.constant_value
    return x


# -- connection and curvature ----------------------------------------------------

def levi_civita(g: Metric) -> Christoffel:
    """Contravariant symbols Gamma^{ij}_k = -g^{is} Gamma^j_{sk} of the Levi-Civita connection."""
    if g.variance != CONTRAVARIANT:
        raise ValueError("levi_civita expects a contravariant metric")
    n = g.n
    u = g.field_vars
    G = g.inverse_entries  # g_{ij}
    dG = [[[lift(G[a][b].diff(u[c])) for c in range(n)] for b in range(n)] for a in range(n)]
    # first kind: [sk, l] = 1/2 (d_s g_lk + d_k g_ls - d_l g_sk)
    half = mpq(1, 2)
    first = [[[(dG[l][k][s] + dG[l][s][k] - dG[s][k][l]) * half for l in range(n)]
              for k in range(n)] for s in range(n)]
    # Gamma^{ij}_k = -g^{is} g^{jl} [sk, l]
    out = [[[ZERO] * n for _ in range(n)] for _ in range(n)]
    for i, j, k in product(range(n), repeat=3):
        acc = ZERO
        for s in range(n):
            if g[i, s].is_zero:
                continue
            for l in range(n):
                if g[j, l].is_zero or first[s][k][l].is_zero:
                    continue
                acc = acc + g[i, s] * g[j, l] * first[s][k][l]
        out[i][j][k] = lift(-acc)
    return Christoffel(out)


def curvature_numerator_terms(G: Christoffel):
    """Quadratic part X^{tjk}_l = Gamma^{tj}_m Gamma^{mk}_l - Gamma^{tk}_m Gamma^{mj}_l."""
    n = G.n
    X = {}
    for t, j, k, l in product(range(n), repeat=4):
        acc = ZERO
        for m in range(n):
            a, b = G[t, j, m], G[m, k, l]
            if not a.is_zero and not b.is_zero:
                acc = acc + a * b
            c, d = G[t, k, m], G[m, j, l]
            if not c.is_zero and not d.is_zero:
                acc = acc - c * d
        X[t, j, k, l] = acc
    return X


def curvature(g: Metric, G: Christoffel | None = None) -> CurvatureTensor:
    """R^{jk}_{sl} = d_s Gamma^{jk}_l - d_l Gamma^{jk}_s - g_{st}(Gamma^{tj}_m Gamma^{mk}_l - Gamma^{tk}_m Gamma^{mj}_l).

    The overall sign is the one under which constant-curvature localizable
    operators satisfy the tail relation R^{ij}_{kh} = w^i_k d^j_h - ... .
    """
    if G is None:
        G = levi_civita(g)
    n = g.n
    u = g.field_vars
    Ginv = g.inverse_entries
    X = curvature_numerator_terms(G)
    R = [[[[ZERO] * n for _ in range(n)] for _ in range(n)] for _ in range(n)]
    for j, k, s, l in product(range(n), repeat=4):
        val = G[j, k, l].diff(u[s]) - G[j, k, s].diff(u[l])
        for t in range(n):
            x = X[t, j, k, l]
            if x.is_zero or Ginv[s][t].is_zero:
                continue
            val = val - Ginv[s][t] * x
        R[j][k][s][l] = lift(val)
    return CurvatureTensor(tuple(tuple(tuple(tuple(r) for r in p) for p in q) for q in R))


@dataclass(frozen=True)
class FlatnessResult:
    flat: bool
    witness: tuple | None = None  # ((i, j, k, h) 1-based, value)

    def __bool__(self):
        return self.flat


def is_flat(g: Metric, G: Christoffel | None = None) -> FlatnessResult:
    R = curvature(g, G)
    nz = R.independent_nonzero() or R.nonzero()
    if not nz:
        return FlatnessResult(True)
    idx = min(nz)
    return FlatnessResult(False, (tuple(i + 1 for i in idx), nz[idx]))


# -- eta lowering / raising and the Monge condition ------------------------------

def _congruence(M, A):
    """A^T M A for a constant matrix A."""
    n = len(A)
    out = [[ZERO] * n for _ in range(n)]
    for a, b in product(range(n), repeat=2):
        acc = ZERO
        for i in range(n):
            if not A[i][a]:
                continue
            for j in range(n):
                if not A[j][b] or M[i][j].is_zero:
                    continue
                acc = acc + M[i][j] * (A[i][a] * A[j][b])
        out[a][b] = acc
    return out


def lower_with_eta(g: Metric, eta: SkewForm) -> Metric:
    """bar g_{ab} = eta_{ia} eta_{jb} g^{ij}."""
    if g.n != eta.n:
        raise DimensionError(f"metric has n={g.n}, eta has n={eta.n}")
    if g.variance != CONTRAVARIANT:
        raise ValueError("lower_with_eta expects a contravariant metric")
    return Metric(_congruence(g.entries, eta.eta_inv), COVARIANT)


def raise_with_eta(gbar: Metric, eta: SkewForm) -> Metric:
    """g^{ij} = eta^{ia} eta^{jb} bar g_{ab}."""
    if gbar.n != eta.n:
        raise DimensionError(f"metric has n={gbar.n}, eta has n={eta.n}")
    if gbar.variance != COVARIANT:
        raise ValueError("raise_with_eta expects a covariant metric")
    etaT = tuple(tuple(eta.eta[j][i] for j in range(eta.n)) for i in range(eta.n))
    return Metric(_congruence(gbar.entries, etaT), CONTRAVARIANT)


@dataclass(frozen=True)
class MongeResult:
    monge: bool
    triple: tuple | None = None  # 1-based (i, j, k)
    residual: object = None

    def __bool__(self):
        return self.monge


def monge_check(gbar: Metric) -> MongeResult:
    """Cyclic condition bar g_{ij,k} + bar g_{ki,j} + bar g_{jk,i} = 0 for every triple."""
    if not gbar.is_polynomial():
        raise ValueError("monge_check needs polynomial entries")
    n = gbar.n
    u = gbar.field_vars
    for i, j, k in product(range(n), repeat=3):
        s = gbar[i, j].diff(u[k]) + gbar[k, i].diff(u[j]) + gbar[j, k].diff(u[i])
        if not s.is_zero:
            return MongeResult(False, (i + 1, j + 1, k + 1), s)
    return MongeResult(True)


def monge_check_contravariant(g: Metric, eta: SkewForm) -> MongeResult:
    """The same condition before lowering: g^{ki}_{,l} eta^{lj} + g^{ij}_{,l} eta^{lk} + g^{jk}_{,l} eta^{li} = 0."""
    n = g.n
    u = g.field_vars
    e = eta.eta
    for i, j, k in product(range(n), repeat=3):
        s = ZERO
        for l in range(n):
            if e[l][j]:
                s = s + g[k, i].diff(u[l]) * e[l][j]
            if e[l][k]:
                s = s + g[i, j].diff(u[l]) * e[l][k]
            if e[l][i]:
                s = s + g[j, k].diff(u[l]) * e[l][i]
        if not lift(s).is_zero:
            return MongeResult(False, (i + 1, j + 1, k + 1), lift(s))
    return MongeResult(True)


def metric_from_rows(rows: Sequence[Sequence], variance: str = CONTRAVARIANT) -> Metric:
    return Metric(tuple(tuple(rows[i][j] for j in range(len(rows))) for i in range(len(rows))), variance)
