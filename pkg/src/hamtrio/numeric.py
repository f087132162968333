"""Floating-point cross-check of the symbolic verdicts.

Nothing here reuses the symbolic residual generators. Operators are evaluated
at random rational points with mpmath, derivatives come from central finite
differences, and the Levi-Civita connection and Riemann tensor are rebuilt from
the covariant metric in the textbook way. A verdict "identically zero" is
confirmed when every recomputed condition is below a relative tolerance at
every sampled point.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import mpmath

from hamtrio.diffgeo import Christoffel, Metric
from hamtrio.hamops import FirstOrderOperator
from hamtrio.symcore.poly import var_key

DPS = 60
STEP = mpmath.mpf(10) ** -20


def _to_mpf(c):
    c = Fraction(int(c.numerator), int(c.denominator)) if not isinstance(c, Fraction) else c
    return mpmath.mpf(c.numerator) / c.denominator


def rational_point(names, rng: random.Random, lo: int = -9, hi: int = 9, den: int = 7) -> dict:
    """Random rationals, avoiding zero so that generic points are generic."""
    out = {}
    for v in names:
        x = 0
        while x == 0:
            x = Fraction(rng.randint(lo, hi), rng.randint(1, den))
        out[v] = x
    return out


def evaluate(expr, point: dict):
    """mpf value of a Polynomial or RationalFunction at a point of Fractions or mpf."""
    pt = {k: (v if isinstance(v, mpmath.mpf) else _to_mpf(v)) for k, v in point.items()}
    return expr.evaluate(pt, _to_mpf)


class NumericOperator:
    """A first-order operator with its parameters frozen at numeric values."""

    def __init__(self, P, params: dict):
        self.P = P
        self.n = P.n
        self.params = dict(params)
        self.u = [f"u{i}" for i in range(1, self.n + 1)]

    def _at(self, u):
        pt = dict(self.params)
        pt.update({name: x for name, x in zip(self.u, u)})
        return pt

    def g(self, u):
        pt = self._at(u)
        return mpmath.matrix([[evaluate(self.P.g[i, j], pt) for j in range(self.n)] for i in range(self.n)])

    def gamma(self, u):
        pt = self._at(u)
        G = self.P.gamma
        n = self.n
        return [[[evaluate(G[i, j, k], pt) for k in range(n)] for j in range(n)] for i in range(n)]

    def w(self):
        pt = dict(self.params)
        return [[evaluate(x, pt) for x in r] for r in self.P.w]


def _shift(u, k, h):
    v = list(u)
    v[k] = v[k] + h
    return v


def fd(f, u, k, h=STEP):
    """Central difference of f (returning a number, matrix or nested list) along u^k."""
    a, b = f(_shift(u, k, h)), f(_shift(u, k, -h))
    return _combine(a, b, lambda x, y: (x - y) / (2 * h))


def _combine(a, b, op):
    if isinstance(a, list):
        return [_combine(x, y, op) for x, y in zip(a, b)]
    if isinstance(a, mpmath.matrix):
        return mpmath.matrix([[op(a[i, j], b[i, j]) for j in range(a.cols)] for i in range(a.rows)])
    return op(a, b)


def lower_metric(op: NumericOperator):
    return lambda u: mpmath.inverse(op.g(u))


def christoffel_second_kind(gl, u, n):
    """Gamma^a_{bc} of the covariant metric function gl by finite differences."""
    dg = [fd(gl, u, c) for c in range(n)]
    ginv = mpmath.inverse(gl(u))
    out = [[[mpmath.mpf(0)] * n for _ in range(n)] for _ in range(n)]
    for a, b, c in product(range(n), repeat=3):
        acc = mpmath.mpf(0)
        for d in range(n):
            acc += ginv[a, d] * (dg[b][d, c] + dg[c][d, b] - dg[d][b, c])
        out[a][b][c] = acc / 2
    return out


def contravariant_christoffel(op: NumericOperator, u):
    """Gamma^{ij}_k = -g^{is} Gamma^j_{sk} from finite differences of the covariant metric."""
    n = op.n
    g = op.g(u)
    C = christoffel_second_kind(lower_metric(op), u, n)
    return [[[-sum(g[i, s] * C[j][s][k] for s in range(n)) for k in range(n)] for j in range(n)] for i in range(n)]


def riemann(op: NumericOperator, u):
    """R^a_{bcd} = d_c G^a_{db} - d_d G^a_{cb} + G^a_{ce} G^e_{db} - G^a_{de} G^e_{cb}."""
    n = op.n
    gl = lower_metric(op)
    h = mpmath.mpf(10) ** -12
    C = christoffel_second_kind(gl, u, n)
    dC = [_combine(christoffel_second_kind(gl, _shift(u, c, h), n), christoffel_second_kind(gl, _shift(u, c, -h), n),
                   lambda x, y: (x - y) / (2 * h)) for c in range(n)]
    R = {}
    for a, b, c, d in product(range(n), repeat=4):
        v = dC[c][a][d][b] - dC[d][a][c][b]
        for e in range(n):
            v += C[a][c][e] * C[e][d][b] - C[a][d][e] * C[e][c][b]
        R[a, b, c, d] = v
    return R


def contravariant_curvature(op: NumericOperator, u):
    """R^{jk}_{sl} = g^{ka} R^j_{a s l}, the index placement used by the symbolic layer."""
    n = op.n
    g = op.g(u)
    R = riemann(op, u)
    return {(j, k, s, l): sum(g[k, a] * R[j, a, s, l] for a in range(n))
            for j, k, s, l in product(range(n), repeat=4)}


# -- recomputed conditions -----------------------------------------------------

def _scale(*arrays):
    m = mpmath.mpf(1)
    for A in arrays:
        for x in _flatten(A):
            m = max(m, abs(x))
    return m


def _flatten(A):
    if isinstance(A, mpmath.matrix):
        return [A[i, j] for i in range(A.rows) for j in range(A.cols)]
    if isinstance(A, dict):
        return list(A.values())
    if isinstance(A, list):
        return [y for x in A for y in _flatten(x)]
    return [A]


def hamiltonian_residual(op: NumericOperator, u) -> float:
    """Largest relative violation of the Hamiltonian conditions at u.

    Metric compatibility and symmetry are checked against the given symbols,
    the tail conditions directly, and the curvature relation through the
    independently rebuilt Riemann tensor.
    """
    n = op.n
    g, G, w = op.g(u), op.gamma(u), op.w()
    dg = [fd(op.g, u, k) for k in range(n)]
    res = []
    for i, j, k in product(range(n), repeat=3):
        res.append(sum(g[i, s] * G[j][k][s] - g[j, s] * G[i][k][s] for s in range(n)))
        res.append(dg[k][i, j] - G[i][j][k] - G[j][i][k])
    for i, j in product(range(n), repeat=2):
        res.append(sum(g[i, s] * w[j][s] - g[j, s] * w[i][s] for s in range(n)))
    # constant tail commuting with the connection, raised: g^{bi} Gamma^{cj}_s w^s_i = g^{ci} Gamma^{bj}_s w^s_i
    for b, c, j in product(range(n), repeat=3):
        res.append(sum(g[b, i] * G[c][j][s] * w[s][i] - g[c, i] * G[b][j][s] * w[s][i]
                       for i in range(n) for s in range(n)))
    R = contravariant_curvature(op, u)
    for j, k, s, l in product(range(n), repeat=4):
        rhs = (w[j][s] * (k == l) - w[k][s] * (j == l) - w[j][l] * (k == s) + w[k][l] * (j == s))
        res.append(R[j, k, s, l] - rhs)
    return float(max(abs(x) for x in res) / _scale(g, G, w))


def compat_residual(op: NumericOperator, eta, u) -> float:
    """Largest relative violation of the compatibility conditions with eta D^2 at u."""
    n = op.n
    e = [[mpmath.mpf(int(x.numerator)) / int(x.denominator) for x in r] for r in eta]
    G, w = op.gamma(u), op.w()
    dG = [fd(op.gamma, u, s) for s in range(n)]
    res = []
    for i, k in product(range(n), repeat=2):
        res.append(sum(w[i][l] * e[l][k] + w[k][l] * e[l][i] for l in range(n)))
    for i, j, k in product(range(n), repeat=3):
        res.append(sum(G[i][j][l] * e[l][k] + G[k][j][l] * e[l][i] for l in range(n)))
        res.append(sum(G[k][i][l] * e[l][j] + G[i][j][l] * e[l][k] + G[j][k][l] * e[l][i] for l in range(n)))
    for p, i, j, r in product(range(n), repeat=4):
        res.append(sum(G[s][j][p] * G[i][r][s] - G[s][r][p] * G[i][j][s] for s in range(n)))
    for k, j, l, s in product(range(n), repeat=4):
        res.append(dG[s][k][j][l] + (j == s) * w[k][l] + w[j][s] * (k == l))
    return float(max(abs(x) for x in res) / _scale(G, w, e))


@dataclass
class OracleResult:
    ok: bool
    worst: float
    points: int

    def __bool__(self):
        return self.ok


def _params_of(*ops) -> list:
    names = set()
    for P in ops:
        names |= P.variables()
    return sorted((v for v in names if var_key(v)[0] != 0), key=var_key)


def _worst_over(ops, points, seed, fn) -> float:
    """max of fn(params, u) over ``points`` random points, redrawing singular ones."""
    rng = random.Random(seed)
    params = _params_of(*ops)
    n = ops[0].n
    worst, done, draws = 0.0, 0, 0
    with mpmath.workdps(DPS):
        while done < points:
            draws += 1
            if draws > 10 * points:
                raise ZeroDivisionError("too many singular sample points")
            pv = rational_point(params, rng)
            u = [_to_mpf(x) for x in rational_point(range(n), rng).values()]
            try:
                val = fn(pv, u)
            except ZeroDivisionError:
                continue
            worst = max(worst, float(val))
            done += 1
    return worst


def check_hamiltonian(P, points: int = 20, tol: float = 1e-9, seed: int = 0) -> OracleResult:
    worst = _worst_over([P], points, seed, lambda pv, u: hamiltonian_residual(NumericOperator(P, pv), u))
    return OracleResult(worst < tol, worst, points)


def check_compat(P, eta, points: int = 20, tol: float = 1e-9, seed: int = 0) -> OracleResult:
    eta = [[Fraction(str(x)) for x in r] for r in getattr(eta, "eta", eta)]
    worst = _worst_over([P], points, seed, lambda pv, u: compat_residual(NumericOperator(P, pv), eta, u))
    return OracleResult(worst < tol, worst, points)


def check_pencil(P, Q, points: int = 20, tol: float = 1e-9, seed: int = 0) -> OracleResult:
    """P + lam Q is Hamiltonian for several numeric lam (each sample draws a fresh lam)."""
    rng = random.Random(seed + 1)
    n = P.n

    def one(pv, u):
        lam = rational_point(["lam"], rng)["lam"]
        g = [[P.g[i, j] + Q.g[i, j].scale(lam) for j in range(n)] for i in range(n)]
        G = [[[P.gamma[i, j, k] + Q.gamma[i, j, k].scale(lam) for k in range(n)] for j in range(n)]
             for i in range(n)]
        w = [[P.w[i][j] + Q.w[i][j].scale(lam) for j in range(n)] for i in range(n)]
        L = FirstOrderOperator(Metric(g), Christoffel(G), w)
        return hamiltonian_residual(NumericOperator(L, pv), u)

    worst = _worst_over([P, Q], points, seed, one)
    return OracleResult(worst < tol, worst, points)


def check_zero(exprs, points: int = 20, tol: float = 1e-9, seed: int = 0, names=None) -> OracleResult:
    """Every expression vanishes at random rational points, relative to the size of its terms."""
    exprs = list(exprs)
    names = sorted(set().union(*(e.variables() for e in exprs)) if names is None else names, key=var_key)
    rng = random.Random(seed)
    worst = 0.0
    with mpmath.workdps(DPS):
        for _ in range(points):
            pt = {k: _to_mpf(v) for k, v in rational_point(names, rng).items()}
            for e in exprs:
                num = e.num if hasattr(e, "num") else e
                val = num.evaluate(pt, _to_mpf)
                size = sum((abs(c) * abs(mpmath.fprod([pt[v] ** k for v, k in m])) for m, c in
                            ((m, _to_mpf(c)) for m, c in num.items())), mpmath.mpf(0))
                worst = max(worst, float(abs(val) / max(size, 1)))
    return OracleResult(worst < tol, worst, points)


def compare_christoffel(P, points: int = 10, tol: float = 1e-6, seed: int = 0) -> OracleResult:
    """Symbolic Christoffel symbols against the finite-difference Levi-Civita connection."""
    def one(pv, u):
        op = NumericOperator(P, pv)
        a, b = op.gamma(u), contravariant_christoffel(op, u)
        return max(abs(x - y) for x, y in zip(_flatten(a), _flatten(b))) / _scale(a, b)

    worst = _worst_over([P], points, seed, one)
    return OracleResult(worst < tol, worst, points)


def compare_curvature(P, R_symbolic, points: int = 10, tol: float = 1e-6, seed: int = 0) -> OracleResult:
    """Symbolic curvature tensor against the finite-difference Riemann tensor."""
    n = P.n
    def one(pv, u):
        op = NumericOperator(P, pv)
        num = contravariant_curvature(op, u)
        pt = dict(pv)
        pt.update({f"u{i + 1}": x for i, x in enumerate(u)})
        sym = {idx: evaluate(R_symbolic[idx], pt) for idx in product(range(n), repeat=4)}
        return max(abs(num[k] - sym[k]) for k in sym) / _scale(num, sym)

    worst = _worst_over([P], points, seed, one)
    return OracleResult(worst < tol, worst, points)
