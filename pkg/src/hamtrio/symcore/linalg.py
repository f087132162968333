"""Linear algebra over Q and over the rational-function field.

Scalars are ``mpq`` when every coefficient is numeric and
:class:`RationalFunction` otherwise; the elimination code is written once
against the common field operations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from gmpy2 import mpq

from hamtrio.symcore.poly import Polynomial, mono_key, var_key
from hamtrio.symcore.ratfunc import RationalFunction, as_rf


# -- coefficient extraction ----------------------------------------------------

def split_by_field_vars(eq, field_vars: Iterable[str] | None = None) -> list[Polynomial]:
    """Coefficients of ``eq`` with respect to the field-variable monomials.

    ``eq`` vanishes identically in u iff every returned polynomial is zero.
    Zero coefficients are not returned, so the zero polynomial gives ``[]``.
    Without ``field_vars`` every ``u<i>`` name counts.
    """
    if isinstance(eq, RationalFunction):
        eq = eq.num
    if field_vars is None:
        names = {v for v in eq.variables() if var_key(v)[0] == 0}
    else:
        names = set(field_vars)
    groups = eq.split_by(names)
    return [groups[m] for m in sorted(groups, key=mono_key) if not groups[m].is_zero]


def split_with_monomials(eq: Polynomial, field_vars: Iterable[str] | None = None) -> list[tuple]:
    if field_vars is None:
        names = {v for v in eq.variables() if var_key(v)[0] == 0}
    else:
        names = set(field_vars)
    groups = eq.split_by(names)
    return [(m, groups[m]) for m in sorted(groups, key=mono_key)]


# -- field helpers -------------------------------------------------------------

def _is_zero(c) -> bool:
    if isinstance(c, RationalFunction):
        return c.is_zero
    return not c


def _to_scalar(p):
    """Numeric constants become mpq, everything else a RationalFunction."""
    if isinstance(p, RationalFunction):
        return p.constant_value if p.is_constant else p
    if isinstance(p, Polynomial):
        return p.constant_value if p.is_constant else RationalFunction.of(p)
    return mpq(p) if not isinstance(p, mpq) else p


def _as_value(c):
    """Scalar back to a Polynomial where possible."""
    if isinstance(c, RationalFunction):
        return c.as_polynomial() if c.is_polynomial else c
    return Polynomial.const(c)


# -- linear systems ------------------------------------------------------------

class InconsistentSystem(ValueError):
    pass


@dataclass(frozen=True)
class LinearSystem:
    unknowns: tuple[str, ...]
    rows: tuple  # Polynomial, linear in the unknowns

    def __post_init__(self):
        object.__setattr__(self, "unknowns", tuple(self.unknowns))
        object.__setattr__(self, "rows", tuple(self.rows))
        fv = [v for r in self.rows for v in _row_vars(r) if var_key(v)[0] == 0]
        if fv:
            raise ValueError(f"field variable {fv[0]} in a linear row; split first")


def _row_vars(r):
    return r.variables() if isinstance(r, Polynomial) else r.variables()


@dataclass
class LinearSolution:
    consistent: bool
    substitution: dict = field(default_factory=dict)  # pivot -> Polynomial | RationalFunction
    free: tuple = ()
    rank: int = 0
    witness: object = None  # the contradictory constant when inconsistent

    def apply(self, p):
        return p.subs(self.substitution)


def _linearize(row: Polynomial, index: Mapping[str, int]):
    """Split ``row`` into ({unknown: coeff}, constant) with coefficients in the scalar field."""
    coeffs: dict = {}
    const: dict = {}
    for m, c in row.items():
        hit = [(v, e) for v, e in m if v in index]
        if not hit:
            const[m] = c
            continue
        if len(hit) > 1 or hit[0][1] != 1:
            raise ValueError(f"row is not linear in the unknowns: {row}")
        v = hit[0][0]
        rest = tuple(t for t in m if t[0] != v)
        coeffs.setdefault(v, {})[rest] = c
    out = {}
    for v, t in coeffs.items():
        s = _to_scalar(Polynomial(t))
        if not _is_zero(s):
            out[v] = s
    return out, _to_scalar(Polynomial(const))


def _reduce(row: dict, const, pivots: dict, order):
    """Eliminate every pivot column from ``row`` (pivot rows have pivot coefficient 1)."""
    hits = [v for v in row if v in pivots]
    if not hits:
        return row, const
    row = dict(row)
    for v in sorted(hits, key=order.__getitem__):
        c = row.pop(v, None)
        if c is None or _is_zero(c):
            continue
        prow, pconst = pivots[v]
        for u, pc in prow.items():
            if u == v:
                continue
            s = row.get(u)
            s = -c * pc if s is None else s - c * pc
            if _is_zero(s):
                row.pop(u, None)
            else:
                row[u] = s
        const = const - c * pconst
    return row, const


def solve_linear(sys: LinearSystem) -> LinearSolution:
    """Reduced row echelon solution; pivots are the earliest unknowns in ``sys.unknowns``."""
    order = {v: i for i, v in enumerate(sys.unknowns)}
    pivots: dict = {}  # pivot -> (row with coefficient 1 at pivot, const); row sums to const
    for r in sys.rows:
        row, const = _linearize(r, order)
        # row . x + const = 0   ->  row . x = -const
        const = -const
        row, const = _reduce(row, const, pivots, order)
        if not row:
            if not _is_zero(const):
                return LinearSolution(False, {}, tuple(sys.unknowns), len(pivots), _as_value(const))
            continue
        p = min(row, key=order.__getitem__)
        inv = 1 / row[p]
        row = {u: c * inv for u, c in row.items()}
        const = const * inv
        # keep the basis fully reduced
        for q, (qrow, qconst) in list(pivots.items()):
            c = qrow.get(p)
            if c is None:
                continue
            nrow = dict(qrow)
            del nrow[p]
            for u, pc in row.items():
                if u == p:
                    continue
                s = nrow.get(u)
                s = -c * pc if s is None else s - c * pc
                if _is_zero(s):
                    nrow.pop(u, None)
                else:
                    nrow[u] = s
            pivots[q] = (nrow, qconst - c * const)
        pivots[p] = (row, const)
    pivots = _canonical_rref(pivots, order)
    free = tuple(v for v in sys.unknowns if v not in pivots)
    subst = {}
    for p in sorted(pivots, key=order.__getitem__):
        row, const = pivots[p]
        val = _as_value(const)
        for u, c in sorted(row.items(), key=lambda t: order[t[0]]):
            if u == p:
                continue
            val = val - _as_value(c) * Polynomial.var(u)
        subst[p] = val
    return LinearSolution(True, subst, free, len(pivots))


def _canonical_rref(pivots: dict, order):
    """Re-pivot onto the leftmost columns so the echelon form is unique."""
    # row space is fixed; recompute RREF by ordinary column sweep over the basis
    rows = [(dict(r), c) for r, c in pivots.values()]
    cols = sorted({u for r, _ in rows for u in r}, key=order.__getitem__)
    out: dict = {}
    used = [False] * len(rows)
    for col in cols:
        k = next((i for i, (r, _) in enumerate(rows) if not used[i] and col in r), None)
        if k is None:
            continue
        used[k] = True
        r, c = rows[k]
        inv = 1 / r[col]
        r = {u: v * inv for u, v in r.items()}
        c = c * inv
        rows[k] = (r, c)
        for i, (s, sc) in enumerate(rows):
            if i == k or col not in s:
                continue
            f = s[col]
            ns = dict(s)
            for u, v in r.items():
                t = ns.get(u)
                t = -f * v if t is None else t - f * v
                if _is_zero(t):
                    ns.pop(u, None)
                else:
                    ns[u] = t
            rows[i] = (ns, sc - f * c)
        out[col] = k
    return {col: rows[k] for col, k in out.items()}


# -- matrices ------------------------------------------------------------------

class DegenerateMatrixError(ValueError):
    def __init__(self, det, message: str = "matrix is degenerate"):
        super().__init__(f"{message}: det = {det}")
        self.det = det


def _laplace(M, rows: tuple, cols: tuple, memo: dict):
    key = (rows, cols)
    hit = memo.get(key)
    if hit is not None:
        return hit
    if len(rows) == 1:
        val = M[rows[0]][cols[0]]
    else:
        r0, rest = rows[0], rows[1:]
        val = 0
        for k, c in enumerate(cols):
            a = M[r0][c]
            if _is_zero(a):
                continue
            minor = _laplace(M, rest, cols[:k] + cols[k + 1:], memo)
            val = val + a * minor if k % 2 == 0 else val - a * minor
    memo[key] = val
    return val


def _prep(M):
    out = []
    for row in M:
        out.append([_lift(x) for x in row])
    return out


def _lift(x):
    if isinstance(x, (Polynomial, RationalFunction)):
        return x
    return Polynomial.const(x)


def det(M: Sequence[Sequence]):
    n = len(M)
    if n == 0:
        return Polynomial.const(1)
    A = _prep(M)
    return _simplify(_laplace(A, tuple(range(n)), tuple(range(n)), {}))


def _simplify(x):
    if isinstance(x, RationalFunction) and x.is_polynomial:
        return x.as_polynomial()
    if isinstance(x, int):
        return Polynomial.const(x)
    return x


def adjugate(M: Sequence[Sequence]) -> list[list]:
    n = len(M)
    A = _prep(M)
    memo: dict = {}
    full = tuple(range(n))
    adj = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if n == 1:
                m = Polynomial.const(1)
            else:
                m = _laplace(A, full[:j] + full[j + 1:], full[:i] + full[i + 1:], memo)
            adj[i][j] = _simplify(m if (i + j) % 2 == 0 else -m)
    return adj


def matrix_inverse(M: Sequence[Sequence]) -> list[list[RationalFunction]]:
    """Exact inverse via the adjugate; raises DegenerateMatrixError when det(M) = 0."""
    d = det(M)
    if d.is_zero:
        raise DegenerateMatrixError(d)
    adj = adjugate(M)
    inv_d = as_rf(d).inverse()
    return [[as_rf(a) * inv_d for a in row] for row in adj]


def matmul(A, B):
    n, k, m = len(A), len(B), len(B[0]) if B else 0
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            s = Polynomial.const(0)
            for t in range(k):
                a, b = A[i][t], B[t][j]
                if _is_zero(a) or _is_zero(b):
                    continue
                s = s + a * b
            row.append(_simplify(s))
        out.append(row)
    return out


def transpose(A):
    return [list(r) for r in zip(*A)]


def rank(M: Sequence[Sequence]) -> int:
    """Rank over Q (or over the rational-function field for symbolic entries)."""
    rows = [[_to_scalar(_lift(x)) for x in r] for r in M]
    if not rows:
        return 0
    ncols = len(rows[0])
    r = 0
    for col in range(ncols):
        k = next((i for i in range(r, len(rows)) if not _is_zero(rows[i][col])), None)
        if k is None:
            continue
        rows[r], rows[k] = rows[k], rows[r]
        piv = rows[r][col]
        for i in range(r + 1, len(rows)):
            f = rows[i][col]
            if _is_zero(f):
                continue
            f = f / piv
            rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        r += 1
        if r == len(rows):
            break
    return r


def identity(n: int) -> list[list[Polynomial]]:
    return [[Polynomial.const(1 if i == j else 0) for j in range(n)] for i in range(n)]
