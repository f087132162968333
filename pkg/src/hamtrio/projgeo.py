"""Plücker coordinates, quadratic line complexes and linear line congruences.

The one-form basis is ``u^i du^j - u^j du^i`` (i < j, lexicographic) followed
by ``du^i``; for n = 2 this is already Lie's order
``(u1 du2 - u2 du1, du1, du2)``. In homogeneous coordinates with
``x^{n+1} = 1`` the form ``u^i du^j - u^j du^i`` is ``p^{ij}`` and ``du^i`` is
``-p^{i,n+1}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product

from gmpy2 import mpq

from hamtrio.diffgeo import COVARIANT, ZERO, Metric, SkewForm, monge_check
from hamtrio.symcore.linalg import LinearSystem, det, rank, solve_linear, split_with_monomials
from hamtrio.symcore.poly import Polynomial, to_mpq


def p_name(i: int, j: int, n: int) -> str:
    """Name of the Plücker coordinate p^{ij} (1-based, i < j <= n+1)."""
    return f"p{i}{j}" if n + 1 < 10 else f"p{i}_{j}"


@dataclass(frozen=True)
class PluckerBasis:
    n: int

    @property
    def labels(self) -> tuple:
        """('x', i, j) for u^i du^j - u^j du^i and ('d', i) for du^i, 1-based."""
        pairs = tuple(("x", i, j) for i, j in combinations(range(1, self.n + 1), 2))
        return pairs + tuple(("d", i) for i in range(1, self.n + 1))

    @property
    def size(self) -> int:
        return self.n * (self.n + 1) // 2

    def __len__(self):
        return self.size

    def describe(self) -> list[str]:
        out = []
        for lab in self.labels:
            if lab[0] == "x":
                _, i, j = lab
                out.append(f"u{i}*du{j} - u{j}*du{i}")
            else:
                out.append(f"du{lab[1]}")
        return out

    @property
    def coefficient_matrix(self) -> list[list[Polynomial]]:
        """L[a][alpha]: coefficient of du^a in the alpha-th form."""
        return _coefficient_matrix(self.n)

    def index(self, label) -> int:
        return self.labels.index(label)

    def plucker_coordinate(self, label) -> tuple:
        """(sign, i, j) such that the form equals sign * p^{ij}."""
        if label[0] == "x":
            return (1, label[1], label[2])
        return (-1, label[1], self.n + 1)


@lru_cache(maxsize=None)
def _coefficient_matrix(n: int):
    basis = PluckerBasis.__new__(PluckerBasis)
    object.__setattr__(basis, "n", n)
    L = [[ZERO] * basis.size for _ in range(n)]
    for alpha, lab in enumerate(basis.labels):
        if lab[0] == "x":
            _, i, j = lab
            L[j - 1][alpha] = Polynomial.var(f"u{i}")
            L[i - 1][alpha] = -Polynomial.var(f"u{j}")
        else:
            L[lab[1] - 1][alpha] = Polynomial.const(1)
    return L


@dataclass(frozen=True)
class QuadricMatrix:
    n: int
    Q: tuple
    gauge_dim: int = 0

    def __post_init__(self):
        Q = tuple(tuple(_entry(x) for x in r) for r in self.Q)
        N = self.n * (self.n + 1) // 2
        if len(Q) != N or any(len(r) != N for r in Q):
            raise ValueError(f"quadric matrix for n={self.n} must be {N} x {N}")
        for a in range(N):
            for b in range(a + 1, N):
                if Q[a][b] != Q[b][a]:
                    raise ValueError(f"quadric matrix is not symmetric at ({a + 1},{b + 1})")
        object.__setattr__(self, "Q", Q)

    @property
    def size(self) -> int:
        return len(self.Q)

    def is_numeric(self) -> bool:
        return all(x.is_constant for r in self.Q for x in r)

    def as_rationals(self):
        return [[x.constant_value for x in r] for r in self.Q]


def _entry(x):
    if isinstance(x, Polynomial):
        return x
    return Polynomial.const(to_mpq(x) if not isinstance(x, int) else x)


def monge_from_Q(Q: QuadricMatrix) -> Metric:
    """Expand X^T Q X over the one-form basis into a covariant metric."""
    n = Q.n
    L = _coefficient_matrix(n)
    N = Q.size
    # LQ[a][beta] = sum_alpha L[a][alpha] Q[alpha][beta]
    LQ = [[ZERO] * N for _ in range(n)]
    for a, beta in product(range(n), range(N)):
        acc = ZERO
        for alpha in range(N):
            if L[a][alpha].is_zero or Q.Q[alpha][beta].is_zero:
                continue
            acc = acc + L[a][alpha] * Q.Q[alpha][beta]
        LQ[a][beta] = acc
    g = [[ZERO] * n for _ in range(n)]
    for a in range(n):
        for b in range(a, n):
            acc = ZERO
            for beta in range(N):
                if LQ[a][beta].is_zero or L[b][beta].is_zero:
                    continue
                acc = acc + LQ[a][beta] * L[b][beta]
            g[a][b] = g[b][a] = acc
    return Metric(g, COVARIANT)


def q_name(alpha: int, beta: int) -> str:
    a, b = sorted((alpha, beta))
    return f"q{a + 1}_{b + 1}"


def symbolic_quadric(n: int, prefix_names=q_name, drop=()) -> tuple[QuadricMatrix, list[str]]:
    """Quadric with one unknown per upper-triangular entry; entries in ``drop`` (0-based pairs) set to 0."""
    N = n * (n + 1) // 2
    drop = {tuple(sorted(d)) for d in drop}
    Q = [[ZERO] * N for _ in range(N)]
    names = []
    for a in range(N):
        for b in range(a, N):
            if (a, b) in drop:
                continue
            nm = prefix_names(a, b)
            names.append(nm)
            Q[a][b] = Q[b][a] = Polynomial.var(nm)
    return QuadricMatrix(n, Q), names


def plucker_relations(n: int) -> list[Polynomial]:
    """p^{ij}p^{kh} - p^{ik}p^{jh} + p^{ih}p^{jk} for i<j<k<h <= n+1."""
    if n < 2:
        raise ValueError("n must be at least 2")

    def p(a, b):
        return Polynomial.var(p_name(a, b, n))

    out = []
    for i, j, k, h in combinations(range(1, n + 2), 4):
        out.append(p(i, j) * p(k, h) - p(i, k) * p(j, h) + p(i, h) * p(j, k))
    return out


def relation_matrices(n: int) -> list[list[list[mpq]]]:
    """Symmetric N x N matrices K with X^T K X equal to each Plücker relation in the form basis."""
    basis = PluckerBasis(n)
    N = basis.size
    where = {}
    for alpha, lab in enumerate(basis.labels):
        s, i, j = basis.plucker_coordinate(lab)
        where[p_name(i, j, n)] = (alpha, s)  # p^{ij} = s * X_alpha
    mats = []
    for rel in plucker_relations(n):
        K = [[mpq(0)] * N for _ in range(N)]
        for m, c in rel.items():
            names = [v for v, e in m for _ in range(e)]
            (a, sa), (b, sb) = where[names[0]], where[names[1]]
            c = c * sa * sb
            if a == b:
                K[a][a] += c
            else:
                K[a][b] += c / 2
                K[b][a] += c / 2
        mats.append(K)
    return mats


class NotMongeError(ValueError):
    pass


def _metric_equations(gbar: Metric, Qsym: QuadricMatrix) -> list[Polynomial]:
    model = monge_from_Q(Qsym)
    rows = []
    n = gbar.n
    for a in range(n):
        for b in range(a, n):
            diff = model[a, b] - gbar[a, b]
            rows.extend(c for _, c in split_with_monomials(diff, [f"u{i}" for i in range(1, n + 1)]))
    return rows


def Q_from_monge(gbar: Metric) -> QuadricMatrix:
    """Quadric with monge_from_Q(Q) = gbar.

    For n >= 3 the answer is fixed by requiring Q to be orthogonal, in the
    entrywise inner product, to every Plücker relation matrix.
    """
    if not monge_check(gbar):
        raise NotMongeError("metric does not satisfy the Monge condition")
    n = gbar.n
    Qsym, names = symbolic_quadric(n)
    rows = _metric_equations(gbar, Qsym)
    N = Qsym.size
    for K in relation_matrices(n):
        acc = ZERO
        for a, b in product(range(N), repeat=2):
            if K[a][b]:
                acc = acc + Qsym.Q[a][b] * K[a][b]
        rows.append(acc)
    sol = solve_linear(LinearSystem(tuple(names), rows))
    if not sol.consistent:
        raise NotMongeError("metric is not quadratic in the Plücker forms")
    if sol.free:
        raise NotMongeError(f"entries are not constant: free {sol.free}")
    Q = [[Qsym.Q[a][b].subs(sol.substitution) for b in range(N)] for a in range(N)]
    return QuadricMatrix(n, Q, len(relation_matrices(n)))


def gauge_difference_in_span(Q1: QuadricMatrix, Q2: QuadricMatrix) -> bool:
    """Whether Q1 - Q2 is a combination of Plücker relation matrices."""
    n = Q1.n
    N = Q1.size
    diff = [[Q1.Q[a][b] - Q2.Q[a][b] for b in range(N)] for a in range(N)]
    if all(x.is_zero for r in diff for x in r):
        return True
    K = relation_matrices(n)
    rows = [[K[r][a][b] for r in range(len(K))] for a in range(N) for b in range(a, N)]
    target = [diff[a][b] for a in range(N) for b in range(a, N)]
    if not all(t.is_constant for t in target):
        return False
    rk = rank(rows)
    aug = [row + [t.constant_value] for row, t in zip(rows, target)]
    return rank(aug) == rk


def conic_rank(Q: QuadricMatrix) -> int:
    if Q.n != 2:
        raise ValueError("conic_rank is defined for n = 2 only")
    if not Q.is_numeric():
        raise ValueError("conic_rank needs numeric entries")
    return rank(Q.as_rationals())


@dataclass(frozen=True)
class CongruenceSystem:
    n: int
    equations: tuple  # homogeneous linear Polynomials in the p^{ij}

    @property
    def coordinates(self) -> tuple[str, ...]:
        return tuple(p_name(i, j, self.n) for i, j in combinations(range(1, self.n + 2), 2))

    @property
    def rank(self) -> int:
        coords = self.coordinates
        return rank([[e.coefficient(((c, 1),)) for c in coords] for e in self.equations]) if self.equations else 0

    @property
    def solution_dim(self) -> int:
        """Dimension of the linear subspace of wedge^2 cut out by the equations."""
        return len(self.coordinates) - self.rank

    @property
    def degenerate(self) -> bool:
        """True when the equations only admit p = 0."""
        return self.solution_dim == 0


def eta_three_form(eta: SkewForm) -> dict:
    """Skew 3-form on n+1 indices (0-based) with eta_{i j n+1} = eta_{ij}."""
    n = eta.n
    low = eta.eta_inv
    out = {}
    for i, j in product(range(n), repeat=2):
        v = low[i][j]
        if not v:
            continue
        k = n
        # cyclic images of (i, j, k); the odd ones come from the (j, i) pass since low is skew
        for key in ((i, j, k), (j, k, i), (k, i, j)):
            out[key] = v
    return out


def linear_congruence(eta: SkewForm) -> CongruenceSystem:
    """Equations eta_{ijk} p^{jk} = 0 (j < k), each scaled to leading coefficient 1."""
    n = eta.n
    form = eta_three_form(eta)
    eqs = []
    for i in range(n + 1):
        acc = ZERO
        for j, k in combinations(range(n + 1), 2):
            v = form.get((i, j, k))
            if v:
                acc = acc + Polynomial.var(p_name(j + 1, k + 1, n)) * v
        if not acc.is_zero:
            eqs.append(acc.monic())
    eqs.sort(key=lambda e: str(e))
    return CongruenceSystem(n, tuple(_canonical_order(eqs, n)))


def _canonical_order(eqs, n):
    coords = [p_name(i, j, n) for i, j in combinations(range(1, n + 2), 2)]
    pos = {c: k for k, c in enumerate(coords)}
    return sorted(eqs, key=lambda e: min(pos[v] for v in e.variables()))


def congruence_transform(Q: QuadricMatrix, A) -> QuadricMatrix:
    """A^T Q A for an invertible constant N x N matrix A."""
    N = Q.size
    A = [[to_mpq(x) if not isinstance(x, Polynomial) else x.constant_value for x in r] for r in A]
    if len(A) != N or any(len(r) != N for r in A):
        raise ValueError(f"transform must be {N} x {N}")
    if det(A).is_zero:
        raise ValueError("singular transformation")
    out = [[ZERO] * N for _ in range(N)]
    for a, b in product(range(N), repeat=2):
        acc = ZERO
        for i in range(N):
            if not A[i][a]:
                continue
            for j in range(N):
                if A[j][b] and not Q.Q[i][j].is_zero:
                    acc = acc + Q.Q[i][j] * (A[i][a] * A[j][b])
        out[a][b] = acc
    return QuadricMatrix(Q.n, out, Q.gauge_dim)


def monge_space_dimension(n: int) -> int:
    """Rank of the linear map Q -> monge_from_Q(Q), by brute force over the entry basis."""
    N = n * (n + 1) // 2
    cols = []
    keys = {}
    for a in range(N):
        for b in range(a, N):
            E = [[0] * N for _ in range(N)]
            E[a][b] = E[b][a] = 1
            g = monge_from_Q(QuadricMatrix(n, E))
            vec = {}
            for i in range(n):
                for j in range(i, n):
                    for m, c in g[i, j].items():
                        key = (i, j, m)
                        keys.setdefault(key, len(keys))
                        vec[keys[key]] = c
            cols.append(vec)
    M = [[col.get(k, 0) for k in range(len(keys))] for col in cols]
    return rank(M)
