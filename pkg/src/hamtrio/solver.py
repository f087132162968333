"""Ansatz generation, equation assembly, linear elimination and case splitting.

The unknowns are constants: the entries of the quadric behind the Monge
metric, the tail ``w`` and the constants ``b`` of the affine Christoffel
symbols. Every condition is expanded, split by field-variable monomials and
collected as a polynomial equation in the unknowns.
"""

from __future__ import annotations

import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable

from hamtrio import fixtures, hamops
from hamtrio.diffgeo import Christoffel, Metric, SkewForm, curvature, lower_with_eta, raise_with_eta
from hamtrio.hamops import FirstOrderOperator, gamma_from_bw
from hamtrio.projgeo import PluckerBasis, Q_from_monge, monge_from_Q, plucker_relations, symbolic_quadric
from hamtrio.symcore.gcd import exact_div, gcd, sqf_factors
from hamtrio.symcore.linalg import DegenerateMatrixError, LinearSystem, solve_linear, split_with_monomials
from hamtrio.symcore.parse import parse_expr
from hamtrio.symcore.poly import Polynomial, var_key
from hamtrio.symcore.ratfunc import RationalFunction, rsubs
from hamtrio.symcore.vars import field_var_names


class SanityError(RuntimeError):
    """A condition the ansatz should satisfy automatically did not reduce to zero."""


# -- ansatz ------------------------------------------------------------------------

def b_name(k: int, j: int, l: int) -> str:
    return f"b{k}{j}_{l}"


def w_name(i: int, j: int) -> str:
    return f"w{i}_{j}"


def gauge_drops(n: int) -> list[tuple[int, int]]:
    """Quadric entries fixed to zero, one per Plücker relation.

    Each relation p^{ij}p^{kh} - p^{ik}p^{jh} + p^{ih}p^{jk} is the only one
    containing the product p^{ih}p^{jk}, so zeroing that entry picks a
    complement of the relation span.
    """
    basis = PluckerBasis(n)
    where = {}
    for alpha, lab in enumerate(basis.labels):
        _, i, j = basis.plucker_coordinate(lab)
        where[(i, j)] = alpha
    out = []
    for i, j, k, h in combinations(range(1, n + 2), 4):
        out.append(tuple(sorted((where[(i, h)], where[(j, k)]))))
    assert len(out) == len(plucker_relations(n))
    return out


@dataclass(frozen=True)
class Ansatz:
    n: int
    eta: SkewForm
    q_names: tuple
    w_names: tuple
    b_names: tuple
    quadric: object
    operator: FirstOrderOperator

    @property
    def unknowns(self) -> tuple:
        """Elimination order: b first, then w, then the quadric entries."""
        return self.b_names + self.w_names + self.q_names

    @property
    def counts(self) -> dict:
        return {"monge": len(self.q_names), "tail": len(self.w_names), "christoffel": len(self.b_names)}

    def substitute(self, subst: dict) -> FirstOrderOperator:
        return self.operator.subs(subst)


def build_ansatz(n: int, eta: SkewForm | None = None) -> Ansatz:
    if n % 2:
        raise ValueError("the second-order operator needs even n")
    eta = eta or SkewForm.standard(n)
    if eta.n != n:
        raise ValueError("eta dimension mismatch")
    drops = gauge_drops(n) if n >= 3 else []
    Q, q_names = symbolic_quadric(n, drop=drops)
    gbar = monge_from_Q(Q)
    g = raise_with_eta(gbar, eta)
    w = [[Polynomial.var(w_name(i + 1, j + 1)) for j in range(n)] for i in range(n)]
    b = [[[Polynomial.var(b_name(k + 1, j + 1, l + 1)) for l in range(n)] for j in range(n)] for k in range(n)]
    G = gamma_from_bw(b, w)
    op = FirstOrderOperator(g, G, w, "ansatz")
    wn = tuple(w_name(i + 1, j + 1) for i in range(n) for j in range(n))
    bn = tuple(b_name(k + 1, j + 1, l + 1) for k in range(n) for j in range(n) for l in range(n))
    return Ansatz(n, eta, tuple(q_names), wn, bn, Q, op)


# -- equation systems ---------------------------------------------------------------

@dataclass(frozen=True)
class Equation:
    poly: Polynomial
    provenance: tuple  # (condition, indices 1-based, field monomial string)

    @property
    def degree(self) -> int:
        return self.poly.degree()


LINEAR_GROUP = ("tail_eta_symmetry", "cocycle", "metric_compatibility")
NONLINEAR_GROUP = ("associativity", "gamma_symmetry", "tail_symmetry", "tail_closure")
SANITY_GROUP = ("cyclic", "affine_gamma", "curvature_tail")


@dataclass
class EquationSystem:
    unknowns: tuple
    linear: list = field(default_factory=list)
    nonlinear: list = field(default_factory=list)
    sanity: dict = field(default_factory=dict)  # condition -> list of Equation (raw residual pieces)

    def all_equations(self) -> list:
        return self.linear + self.nonlinear

    def polys(self) -> list[Polynomial]:
        return [e.poly for e in self.all_equations()]

    def __len__(self):
        return len(self.linear) + len(self.nonlinear)


def normalize_eq(p: Polynomial) -> Polynomial:
    return p.primitive()


def residuals_for(a: Ansatz, condition: str):
    op, eta = a.operator, a.eta
    g, G, w = op.g, op.gamma, op.w
    gen = {
        "tail_eta_symmetry": lambda: hamops.tail_eta_residuals(w, eta),
        "cocycle": lambda: hamops.cocycle_residuals(G, eta),
        "cyclic": lambda: hamops.cyclic_residuals(G, eta),
        "associativity": lambda: hamops.associativity_residuals(G),
        "affine_gamma": lambda: hamops.affine_residuals(G, w),
        "metric_compatibility": lambda: hamops.metric_compatibility_residuals(g, G),
        "gamma_symmetry": lambda: hamops.gamma_symmetry_residuals(g, G),
        "tail_symmetry": lambda: hamops.tail_symmetry_residuals(g, w),
        "tail_closure": lambda: hamops.tail_closure_residuals(g, G, w),
        "curvature_tail": lambda: hamops.curvature_tail_residuals(g, G, w),
    }[condition]
    return gen()


def _split(condition: str, residuals, fv) -> list[Equation]:
    out = []
    for idx, r in residuals:
        for m, c in split_with_monomials(r, fv):
            if c.is_zero:
                continue
            ms = "*".join(v if e == 1 else f"{v}^{e}" for v, e in m) or "1"
            out.append(Equation(c, (condition, tuple(i + 1 for i in idx), ms)))
    return out


def _dedup(eqs: Iterable[Equation]) -> list[Equation]:
    seen = {}
    for e in eqs:
        key = normalize_eq(e.poly)
        if key.is_zero or key in seen:
            continue
        seen[key] = Equation(key, e.provenance)
    return list(seen.values())


def assemble_system(a: Ansatz, conditions: Iterable[str] | None = None, sanity: bool = True,
                    enforce_cyclic: bool = True) -> EquationSystem:
    """Expand the compatibility and Hamiltonianity conditions into equations in the unknowns.

    Equations are classed as linear or nonlinear by their actual degree.
    With ``sanity`` the conditions expected to hold automatically are expanded too,
    for :func:`check_sanity`. The cyclic condition is linear in the unknowns but
    does not follow from the others once n >= 4, so by default it is imposed as
    well; pass ``enforce_cyclic=False`` for the bare system.
    """
    fv = field_var_names(a.n)
    conds = tuple(conditions) if conditions is not None else LINEAR_GROUP + NONLINEAR_GROUP
    if conditions is None and enforce_cyclic:
        conds = conds + ("cyclic",)
    eqs = []
    for c in conds:
        eqs.extend(_split(c, residuals_for(a, c), fv))
    eqs = _dedup(eqs)
    sys = EquationSystem(a.unknowns)
    for e in eqs:
        (sys.linear if e.degree <= 1 else sys.nonlinear).append(e)
    if sanity and conditions is None:
        for c in SANITY_GROUP:
            sys.sanity[c] = _split(c, residuals_for(a, c), fv)
    return sys


# -- linear stage -------------------------------------------------------------------

@dataclass
class Reduction:
    system: EquationSystem
    substitution: dict
    consistent: bool = True
    free: tuple = ()
    rank: int = 0


def solve_linear_eqs(eqs: list[Equation], unknowns: tuple):
    return solve_linear(LinearSystem(unknowns, [e.poly for e in eqs]))


def reduce_linear(sys: EquationSystem, substitution: dict | None = None) -> Reduction:
    """Solve the linear part, substitute into the rest and re-split into linear and nonlinear parts.

    Repeats until no linear equation is left.
    """
    subst = dict(substitution or {})
    linear = list(sys.linear)
    nonlinear = list(sys.nonlinear)
    rank = 0
    while True:
        if linear:
            sol = solve_linear_eqs(linear, sys.unknowns)
            if not sol.consistent:
                empty = EquationSystem(sys.unknowns, [Equation(sol.witness, ("inconsistent", (), ""))], [])
                return Reduction(empty, subst, False, (), sol.rank)
            rank += sol.rank
            subst = compose(subst, sol.substitution)
        new = _dedup(Equation(e.poly.subs(subst), e.provenance) for e in nonlinear)
        linear = [e for e in new if e.degree <= 1]
        nonlinear = [e for e in new if e.degree > 1]
        if any(e.poly.is_constant for e in linear):
            bad = next(e for e in linear if e.poly.is_constant)
            return Reduction(EquationSystem(sys.unknowns, [bad], []), subst, False, (), rank)
        if not linear:
            break
    free = tuple(v for v in sys.unknowns if v not in subst)
    out = EquationSystem(sys.unknowns, [], nonlinear)
    return Reduction(out, subst, True, free, rank)


def compose(first: dict, second: dict) -> dict:
    """Substitution applying ``first`` then ``second``."""
    out = {k: v.subs(second) for k, v in first.items()}
    for k, v in second.items():
        if k not in out:
            out[k] = v
    return out


# -- sanity layer --------------------------------------------------------------------

def check_sanity(a: Ansatz, sys: EquationSystem, red: Reduction | None = None, strict: bool = True) -> dict:
    """Residuals of the conditions expected to hold automatically.

    * the affine derivative condition must vanish identically;
    * the tail-curvature equations must coincide, component by component,
      with the associativity equations (their difference vanishes identically);
    * the cyclic condition must vanish after the linear substitution coming
      from the other linear conditions.

    Returns {condition: list of nonzero leftovers}. With ``strict`` any leftover
    raises SanityError instead.
    """
    out = {}
    fv = field_var_names(a.n)
    out["affine_gamma"] = [e for e in sys.sanity.get("affine_gamma", []) if not e.poly.is_zero]
    # tail-curvature residual E^{ajk}_l equals the associativity residual with (i, j, r, p) = (a, j, k, l)
    assoc = {idx: r for idx, r in hamops.associativity_residuals(a.operator.gamma)}
    left = []
    for idx, r in hamops.curvature_tail_residuals(a.operator.g, a.operator.gamma, a.operator.w):
        d = r - assoc[idx]
        if not d.is_zero:
            left.extend(_split("curvature_tail", [(idx, d)], fv))
    out["curvature_tail"] = left
    if red is None or any(e.provenance[0] == "cyclic" for e in sys.linear):
        base = [e for e in sys.linear if e.provenance[0] != "cyclic"]
        subst = reduce_linear(EquationSystem(sys.unknowns, base, [])).substitution
    else:
        subst = red.substitution
    cyc = []
    for e in sys.sanity.get("cyclic", []):
        p = e.poly.subs(subst)
        if not p.is_zero:
            cyc.append(Equation(normalize_eq(p), e.provenance))
    out["cyclic"] = _dedup(cyc)
    bad = {k: v for k, v in out.items() if v}
    if bad and strict:
        k = next(iter(bad))
        raise SanityError(f"{k} does not vanish under the ansatz: {bad[k][0].poly} from {bad[k][0].provenance}")
    return out


# -- case splitting ------------------------------------------------------------------

SOLVED, RESIDUAL, INCOMPLETE = "solved", "residual", "incomplete"


@dataclass
class SolutionBranch:
    """One leaf of the splitting tree.

    ``substitution`` maps eliminated unknowns to polynomials (or quotients) in the
    free ones. ``residuals`` are equations still to be solved (empty when the
    branch is solved) and ``nonzero`` the factors assumed not to vanish.
    """

    substitution: dict
    residuals: tuple = ()
    nonzero: tuple = ()
    history: tuple = ()
    status: str = SOLVED
    verdict: str | None = None

    def free(self, unknowns) -> tuple:
        return tuple(v for v in unknowns if v not in self.substitution)

    @property
    def key(self) -> tuple:
        return self.history

    def apply(self, p) -> RationalFunction:
        return rsubs(p, self.substitution)


@dataclass
class SplitResult:
    branches: list
    incomplete: bool
    nodes: int
    elapsed: float
    dropped: int = 0  # branches removed as contained in others

    def __iter__(self):
        return iter(self.branches)

    def __len__(self):
        return len(self.branches)


@dataclass(frozen=True)
class _Node:
    eqs: tuple
    steps: tuple  # ((var, value), ...) in elimination order
    nonzero: tuple
    history: tuple
    depth: int


def _strip(p: Polynomial, nonzero) -> Polynomial:
    """Divide out monomial factors and known non-vanishing factors, make primitive."""
    if p.is_zero or p.is_constant:
        return p
    mono = p.monomial_content()
    if mono:
        # x^k = 0 is x = 0, and known nonzero variables drop out
        drop = tuple((v, e) if any(len(f) == 1 and f.variables() == {v} for f in nonzero) else (v, e - 1)
                     for v, e in mono)
        drop = tuple((v, e) for v, e in drop if e)
        if drop:
            p = p.div_monomial(drop)
    for f in nonzero:
        if len(f) == 1 or f.is_constant or not (f.variables() <= p.variables()):
            continue
        while not p.is_constant:
            h = gcd(p, f)
            if h.is_constant:
                break
            p = exact_div(p, h)
    return p.primitive() if not p.is_constant else p


_SQF_CACHE: dict = {}


def _factors(p: Polynomial) -> list:
    """Distinct primitive non-constant square-free factors, cached (equations recur across nodes)."""
    hit = _SQF_CACHE.get(p)
    if hit is None:
        hit = [f.primitive() for f in sqf_factors(p) if not f.is_constant]
        if len(_SQF_CACHE) > 200_000:
            _SQF_CACHE.clear()
        _SQF_CACHE[p] = hit
    return list(hit)


def _product(fs) -> Polynomial:
    out = Polynomial.const(1)
    for f in fs:
        out = out * f
    return out


def _apply_step(p: Polynomial, var: str, value) -> Polynomial:
    if var not in p.variables():
        return p
    if isinstance(value, Polynomial):
        return p.subs({var: value})
    return rsubs(p, {var: value}).num


class _Splitter:
    def __init__(self, unknowns, max_depth, max_branches, budget):
        self.order = {v: i for i, v in enumerate(unknowns)}
        self.unknowns = tuple(unknowns)
        self.max_depth = max_depth
        self.max_branches = max_branches
        self.deadline = None if budget is None else time.monotonic() + budget
        self.nodes = 0

    def _vkey(self, v):
        return (self.order.get(v, len(self.order)), var_key(v))

    def _eliminate(self, node: _Node, var: str, value) -> _Node | None:
        eqs = tuple(_apply_step(e, var, value) for e in node.eqs)
        nz = []
        for f in node.nonzero:
            f2 = _apply_step(f, var, value)
            if f2.is_zero:
                return None
            if not f2.is_constant:
                nz.append(f2)
        if isinstance(value, RationalFunction):
            for h in _factors(value.den):
                if h not in nz:
                    nz.append(h)
        return _Node(eqs, node.steps + ((var, value),), tuple(nz), node.history, node.depth)

    def simplify(self, node: _Node) -> _Node | None:
        """Linear elimination and isolation of variables with numeric coefficients, to a fixpoint."""
        while True:
            seen, eqs = set(), []
            for e in node.eqs:
                e = _strip(e, node.nonzero)
                if e.is_zero or e in seen:
                    continue
                if e.is_constant:
                    return None
                seen.add(e)
                eqs.append(e)
            eqs.sort(key=lambda e: (len(e), str(e)))
            node = _Node(tuple(eqs), node.steps, node.nonzero, node.history, node.depth)
            lin = [e for e in eqs if e.degree() <= 1]
            if lin:
                names = sorted(set().union(*(e.variables() for e in lin)), key=self._vkey)
                sol = solve_linear(LinearSystem(tuple(names), lin))
                if not sol.consistent:
                    return None
                for v in names:
                    if v in sol.substitution:
                        node = self._eliminate(node, v, sol.substitution[v])
                        if node is None:
                            return None
                continue
            pick = None
            for e in eqs:
                for v in sorted(e.variables(), key=self._vkey):
                    if e.degree_in([v]) == 1:
                        c = e.diff(v)
                        if c.is_constant:
                            pick = (v, (c * Polynomial.var(v) - e).scale(1 / c.constant_value))
                            break
                if pick:
                    break
            if pick is None:
                return node
            node = self._eliminate(node, *pick)
            if node is None:
                return None

    def children(self, node: _Node):
        """Split on the first factorable equation, else on a linear coefficient."""
        present = set(node.eqs)
        for idx, e in enumerate(node.eqs):
            fs = [f for f in _factors(e) if f not in node.nonzero]
            if len(fs) >= 2 and any(f in present for f in fs):
                # implied by an equation already present
                rest = node.eqs[:idx] + node.eqs[idx + 1:]
                return [_Node(rest, node.steps, node.nonzero, node.history, node.depth)]
            if len(fs) == 1 and fs[0] != e:
                # a power of a single factor: keep just the factor
                rest = node.eqs[:idx] + node.eqs[idx + 1:] + (fs[0],)
                return [_Node(rest, node.steps, node.nonzero, node.history, node.depth)]
            if len(fs) >= 2:
                fs.sort(key=lambda f: (len(f), str(f)))
                out = []
                for t, f in enumerate(fs):
                    rest = node.eqs[:idx] + node.eqs[idx + 1:] + (f,)
                    nz = node.nonzero + tuple(fs[:t])
                    out.append(_Node(rest, node.steps, nz, node.history + (f"{f} = 0",), node.depth + 1))
                return out
        for e in node.eqs:
            best = None
            for v in sorted(e.variables(), key=self._vkey):
                if e.degree_in([v]) == 1:
                    c = e.diff(v)
                    if best is None or len(c) < len(best[1]):
                        best = (v, c)
            if best is None:
                continue
            v, c = best
            r = e - c * Polynomial.var(v)
            value = RationalFunction(-r, c)
            cfs = _factors(c)
            cp = _product(cfs)
            if all(f in node.nonzero for f in cfs):
                child = self._eliminate(node, v, value)
                return [child] if child is not None else []
            nz = node.nonzero + tuple(f for f in cfs if f not in node.nonzero)
            generic = self._eliminate(
                _Node(node.eqs, node.steps, nz, node.history + (f"{cp} <> 0",), node.depth + 1), v, value)
            special = _Node(node.eqs + (cp,), node.steps, node.nonzero, node.history + (f"{cp} = 0",),
                            node.depth + 1)
            return [x for x in (generic, special) if x is not None]
        return None

    def out_of_budget(self, emitted: int) -> bool:
        if emitted >= self.max_branches:
            return True
        return self.deadline is not None and time.monotonic() > self.deadline


def _finalize(node: _Node, status: str) -> SolutionBranch:
    # each step's value may mention unknowns eliminated later: back-substitute
    final: dict = {}
    for var, value in reversed(node.steps):
        if set(final) & value.variables():
            value = rsubs(value, final)
        final[var] = value.as_polynomial() if isinstance(value, RationalFunction) and value.is_polynomial else value
    subst = {v: final[v] for v, _ in node.steps}
    return SolutionBranch(subst, tuple(node.eqs), tuple(node.nonzero), node.history, status)


def case_split(sys: EquationSystem, max_depth: int = 12, max_branches: int = 512, substitution: dict | None = None,
               time_budget: float | None = None, dedup: bool = True, nonzero=(), history=()) -> SplitResult:
    """Depth-first splitting of the nonlinear stage.

    At each node the equations are reduced (linear solve, then isolation of
    variables whose coefficient is a number). The shortest equation with two or
    more distinct square-free factors is split into one branch per factor,
    earlier factors being assumed nonzero in later branches. Failing that an
    equation ``c*x + r`` is split into ``c != 0, x = -r/c`` and ``c = 0``.
    A node where neither applies is emitted with status ``residual``. Hitting a
    bound emits the open nodes with status ``incomplete``.
    """
    sp = _Splitter(sys.unknowns, max_depth, max_branches, time_budget)
    steps = tuple((k, v) for k, v in (substitution or {}).items())
    root = _Node(tuple(e.poly if isinstance(e, Equation) else e for e in sys.all_equations()), steps,
                 tuple(nonzero), tuple(history), 0)
    stack = [root]
    leaves: list[SolutionBranch] = []
    incomplete = False
    t0 = time.monotonic()
    while stack:
        node = stack.pop()
        if sp.out_of_budget(len(leaves)):
            incomplete = True
            leaves.append(_finalize(node, INCOMPLETE))
            continue
        sp.nodes += 1
        node = sp.simplify(node)
        if node is None:
            continue
        if not node.eqs:
            leaves.append(_finalize(node, SOLVED))
            continue
        if node.depth >= max_depth:
            incomplete = True
            leaves.append(_finalize(node, INCOMPLETE))
            continue
        kids = sp.children(node)
        if kids is None:
            leaves.append(_finalize(node, RESIDUAL))
            continue
        stack.extend(reversed(kids))
    dropped = 0
    if dedup:
        kept = _dedup_branches(leaves, sys.unknowns)
        dropped = len(leaves) - len(kept)
        leaves = kept
    leaves.sort(key=lambda b: b.history)
    return SplitResult(leaves, incomplete, sp.nodes, time.monotonic() - t0, dropped)


# -- inclusion between branches ------------------------------------------------------

def _sample(br: SolutionBranch, unknowns, rng, tries: int = 6):
    """A point of the branch's solution set (exact rationals), or None."""
    free = br.free(unknowns)
    for _ in range(tries):
        pt = {v: Fraction(rng.randint(-97, 97), rng.randint(1, 13)) for v in free}
        try:
            full = dict(pt)
            for v, val in br.substitution.items():
                full[v] = val.evaluate(pt, Fraction)
        except ZeroDivisionError:
            continue
        if any(f.evaluate(full, Fraction) == 0 for f in br.nonzero):
            continue
        return full
    return None


def contained_in(a: SolutionBranch, b: SolutionBranch, unknowns, rng=None) -> bool:
    """Whether every point of branch ``a`` satisfies branch ``b``.

    Only solved branches of ``a`` are considered: ``a``'s substitution must
    annihilate each relation ``x - value`` of ``b`` and each residual of ``b``.
    A random point is tried first as a cheap filter, then the symbolic check decides.
    """
    if a.residuals:
        return False
    rng = rng or random.Random(0)
    rel = [Polynomial.var(x) - v if isinstance(v, Polynomial) else RationalFunction.of(Polynomial.var(x)) - v
           for x, v in b.substitution.items()] + list(b.residuals)
    pt = _sample(a, unknowns, rng)
    if pt is not None:
        for f in b.nonzero:
            if f.evaluate(pt, Fraction) == 0:
                return False
        for r in rel:
            try:
                if r.evaluate(pt, Fraction) != 0:
                    return False
            except ZeroDivisionError:
                pass
    try:
        if any(rsubs(f, a.substitution).is_zero for f in b.nonzero):
            return False
        return all(rsubs(r, a.substitution).is_zero for r in rel)
    except ZeroDivisionError:
        # a lies where one of b's denominators vanishes, outside b
        return False


def _dedup_branches(leaves, unknowns):
    keep = []
    for i, a in enumerate(leaves):
        if a.status != SOLVED:
            keep.append(a)
            continue
        redundant = False
        for j, b in enumerate(leaves):
            if i == j or b.status == INCOMPLETE:
                continue
            if contained_in(a, b, unknowns):
                # mutual inclusion keeps the earlier one
                if not (j > i and contained_in(b, a, unknowns)):
                    redundant = True
                    break
        if not redundant:
            keep.append(a)
    return keep


# -- verification --------------------------------------------------------------------

def residuals_against(br: SolutionBranch, eqs) -> list:
    """Numerators of the given equations after substituting the branch; empty means all vanish."""
    out = []
    for e in eqs:
        p = e.poly if isinstance(e, Equation) else e
        r = rsubs(p, br.substitution)
        if not r.is_zero:
            out.append(r.num)
    return out


def branch_operator(br: SolutionBranch, a: Ansatz) -> FirstOrderOperator:
    op = a.operator
    conv = lambda x: _collapse(rsubs(x, br.substitution))
    g = Metric([[conv(x) for x in r] for r in op.g.entries])
    G = Christoffel(tuple(tuple(tuple(conv(x) for x in r2) for r2 in r1) for r1 in op.gamma.symbols))
    w = [[conv(x) for x in r] for r in op.w]
    return FirstOrderOperator(g, G, w, name="branch")


def _collapse(x: RationalFunction):
    return x.as_polynomial() if x.is_polynomial else x


def verify_branch(br: SolutionBranch, a: Ansatz, check_degeneracy: bool = True):
    """Hamiltonianity and compatibility with the second-order operator for the branch operator.

    Sets ``br.verdict`` to pass, fail, degenerate (metric identically degenerate)
    or open (residual constraints remain, so the checks are only conditional).
    """
    op = branch_operator(br, a)
    R = hamops.SecondOrderConstantOperator(a.eta)
    try:
        rep = hamops.hamiltonian_check(op, check_degeneracy=check_degeneracy)
    except DegenerateMatrixError:
        rep = hamops.hamiltonian_check(op, check_degeneracy=False)
        rep.flags.append("degenerate metric")
    rep.extend(hamops.compat_with_R2(op, R), prefix="R2:")
    if br.residuals:
        br.verdict = "open"
    elif "degenerate metric" in rep.flags:
        br.verdict = "degenerate"
    else:
        br.verdict = "pass" if rep.passed else "fail"
    return rep


def _verify_one(args):
    br, a = args
    rep = verify_branch(br, a)
    return br.verdict, rep


def verify_branches(branches, a: Ansatz, threads: int | None = None) -> list:
    """Verify many branches, optionally in worker processes (capped by HAMTRIO_THREADS)."""
    if threads is None:
        threads = int(os.environ.get("HAMTRIO_THREADS", "1") or 1)
    if threads <= 1 or len(branches) <= 1:
        return [verify_branch(b, a) for b in branches]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        results = list(ex.map(_verify_one, [(b, a) for b in branches]))
    for b, (verdict, _) in zip(branches, results):
        b.verdict = verdict
    return [rep for _, rep in results]


# -- persistence ---------------------------------------------------------------------

TREE_HEADER = "# hamtrio branch tree v1"


def _expr_str(x) -> str:
    return str(x)


def dump_tree(result, unknowns, path=None) -> str:
    """Line-oriented text form of a split result; byte-identical for identical runs."""
    branches = result.branches if isinstance(result, SplitResult) else list(result)
    incomplete = result.incomplete if isinstance(result, SplitResult) else any(
        b.status == INCOMPLETE for b in branches)
    lines = [TREE_HEADER, "unknowns: " + " ".join(unknowns), f"branches: {len(branches)}",
             f"incomplete: {'yes' if incomplete else 'no'}", ""]
    for i, b in enumerate(branches, 1):
        lines.append(f"branch {i}")
        lines.append(f"status: {b.status}")
        lines.append(f"verdict: {b.verdict or '-'}")
        lines.extend(f"split: {h}" for h in b.history)
        lines.extend(f"nonzero: {_expr_str(f)}" for f in b.nonzero)
        order = {v: k for k, v in enumerate(unknowns)}
        for v in sorted(b.substitution, key=lambda x: order.get(x, len(order))):
            lines.append(f"set: {v} = {_expr_str(b.substitution[v])}")
        lines.extend(f"residual: {_expr_str(r)}" for r in b.residuals)
        lines.append("end")
        lines.append("")
    text = "\n".join(lines)
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text


def load_tree(text: str):
    """Inverse of :func:`dump_tree`: returns (unknowns, branches, incomplete)."""
    lines = text.replace("\r\n", "\n").split("\n")
    if not lines or lines[0].strip() != TREE_HEADER:
        raise ValueError("not a branch tree dump")
    unknowns, incomplete, branches, cur = (), False, [], None
    for ln in lines[1:]:
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        key, _, val = ln.partition(":")
        if ln.startswith("branch "):
            cur = {"status": SOLVED, "verdict": None, "split": [], "nonzero": [], "set": {}, "residual": []}
        elif ln == "end":
            branches.append(SolutionBranch(cur["set"], tuple(cur["residual"]), tuple(cur["nonzero"]),
                                           tuple(cur["split"]), cur["status"], cur["verdict"]))
            cur = None
        elif cur is None:
            if key == "unknowns":
                unknowns = tuple(val.split())
            elif key == "incomplete":
                incomplete = val.strip() == "yes"
        else:
            val = val.strip()
            if key == "status":
                cur["status"] = val
            elif key == "verdict":
                cur["verdict"] = None if val == "-" else val
            elif key == "split":
                cur["split"].append(val)
            elif key == "nonzero":
                cur["nonzero"].append(parse_expr(val))
            elif key == "residual":
                cur["residual"].append(parse_expr(val))
            elif key == "set":
                name, _, expr = val.partition("=")
                cur["set"][name.strip()] = parse_expr(expr.strip())
            else:
                raise ValueError(f"unknown record {key!r}")
    return unknowns, branches, incomplete


def resume(branches, unknowns, max_depth: int = 12, max_branches: int = 512,
           time_budget: float | None = None) -> SplitResult:
    """Continue splitting the incomplete branches of an earlier run; finished ones are kept."""
    done = [b for b in branches if b.status != INCOMPLETE]
    t0 = time.monotonic()
    incomplete, nodes = False, 0
    for b in branches:
        if b.status != INCOMPLETE:
            continue
        sys = EquationSystem(tuple(unknowns), [], list(b.residuals))
        budget = None if time_budget is None else max(0.0, time_budget - (time.monotonic() - t0))
        r = case_split(sys, max_depth, max(1, max_branches - len(done)), dict(b.substitution), budget,
                       dedup=False, nonzero=b.nonzero, history=b.history)
        done.extend(r.branches)
        incomplete |= r.incomplete
        nodes += r.nodes
    kept = _dedup_branches(done, unknowns)
    kept.sort(key=lambda b: b.history)
    return SplitResult(kept, incomplete, nodes, time.monotonic() - t0, len(done) - len(kept))


# -- published solutions as points of the ansatz --------------------------------------

def ansatz_point(a: Ansatz, op: FirstOrderOperator, prefix: str = "f_") -> dict:
    """Values of the ansatz unknowns reproducing ``op``, in terms of op's own parameters.

    The operator's parameters are renamed with ``prefix`` first, since published
    solutions reuse names such as ``b22_1`` for their free constants. Raises
    ValueError if ``op`` is not of the ansatz form.
    """
    fv = field_var_names(a.n)
    params = sorted(v for v in op.variables() if v not in fv)
    ren = {v: Polynomial.var(prefix + v) for v in params}
    target = op.subs(ren) if ren else op
    rows = []
    A = a.operator
    n = a.n
    for i in range(n):
        for j in range(n):
            rows.append(A.g[i, j] - target.g[i, j])
            rows.append(A.w[i][j] - target.w[i][j])
            for k in range(n):
                rows.append(A.gamma[i, j, k] - target.gamma[i, j, k])
    eqs = []
    for r in rows:
        eqs.extend(c for _, c in split_with_monomials(r, fv) if not c.is_zero)
    sol = solve_linear(LinearSystem(a.unknowns, eqs))
    if not sol.consistent:
        raise ValueError(f"operator is not of the ansatz form (witness {sol.witness})")
    return {v: sol.substitution.get(v, Polynomial.var(v)) for v in a.unknowns}


def point_residuals(point: dict, red: Reduction) -> list:
    """Nonzero residuals of the reduced system (linear relations and nonlinear part) at a point."""
    out = []
    for x, v in red.substitution.items():
        d = point[x] - v.subs(point)
        if not d.is_zero:
            out.append(d)
    for e in red.system.nonlinear:
        p = e.poly.subs(point)
        if not p.is_zero:
            out.append(p)
    return out


# -- the two-component classification ---------------------------------------------------

class ClassificationError(AssertionError):
    pass


@dataclass
class N2Classification:
    branch: SolutionBranch
    metric: list  # 2x2 entries in c0..c5
    basis: dict  # c_m -> 2x2 coefficient matrix
    tail: list
    q_matrix: list  # Q of the lowered metric in c0..c5
    q_convention: str
    curvature: dict  # independent nonzero components in c's, 1-based
    local_specialization: list
    c_of_q: dict
    seconds: float

    def summary(self) -> str:
        out = ["two-component operators compatible with [[0,1],[-1,0]] D^2: one branch"]
        for (i, j) in ((0, 0), (0, 1), (1, 1)):
            out.append(f"  g^{i + 1}{j + 1} = {self.metric[i][j]}")
        out.append(f"  w = {self.tail[0][0]} * Id")
        out.append("  Q = " + "; ".join(", ".join(str(x) for x in r) for r in self.q_matrix))
        out.append(f"  ({self.q_convention})")
        out.append("  curvature: " + ", ".join(f"R^{i}{j}_{k}{h} = {v}" for (i, j, k, h), v in self.curvature.items()))
        return "\n".join(out)


def classify_n2(check: bool = True) -> N2Classification:
    """Run the pipeline for n = 2 and express the single branch in the published parameters.

    The branch's metric is matched against the six-parameter family; the
    matching is linear and must be invertible, which makes the two
    parametrisations span the same space term by term.
    """
    t0 = time.monotonic()
    a = build_ansatz(2, SkewForm(fixtures.ETA_2_STANDARD))
    sys = assemble_system(a)
    check_sanity(a, sys, strict=True)
    red = reduce_linear(sys)
    res = case_split(red.system, substitution=red.substitution)
    if len(res) != 1 or res.incomplete or res.branches[0].status != SOLVED:
        raise ClassificationError(f"expected one solved branch, got {[(b.status, b.history) for b in res]}")
    br = res.branches[0]
    op = branch_operator(br, a)
    fam = fixtures.n2_family()["P"]
    cs = fixtures.N2_PARAMS
    fv = field_var_names(2)
    rows = []
    for i in range(2):
        for j in range(i, 2):
            rows.extend(c for _, c in split_with_monomials(op.g[i, j] - fam.g[i, j], fv) if not c.is_zero)
    fwd = solve_linear(LinearSystem(cs, rows))
    free_q = br.free(a.unknowns)
    back = solve_linear(LinearSystem(free_q, rows))
    if not (fwd.consistent and back.consistent and not fwd.free and not back.free):
        raise ClassificationError("branch metric and published family are not linearly equivalent")
    q_of_c = back.substitution
    metric = [[op.g[i, j].subs(q_of_c) for j in range(2)] for i in range(2)]
    diff = [(i + 1, j + 1, metric[i][j] - fam.g[i, j]) for i in range(2) for j in range(2)
            if not (metric[i][j] - fam.g[i, j]).is_zero]
    tail = [[_collapse(RationalFunction.of(op.w[i][j]) if isinstance(op.w[i][j], Polynomial) else op.w[i][j])
             for j in range(2)] for i in range(2)]
    tail = [[x.subs(q_of_c) for x in r] for r in tail]
    expect_w = [[fam.w[i][j] for j in range(2)] for i in range(2)]
    if check and diff:
        raise ClassificationError(f"metric differs from the published family: {diff}")
    if check and tail != expect_w:
        raise ClassificationError(f"tail {tail} differs from -c0/2 Id")
    basis = {}
    for c in cs:
        basis[c] = [[metric[i][j].diff(c) for j in range(2)] for i in range(2)]
        for i in range(2):
            for j in range(2):
                d = basis[c][i][j]
                if d.variables() & set(cs):
                    raise ClassificationError("metric is not linear in the parameters")
    gbar = lower_with_eta(fam.g, SkewForm(fixtures.ETA_2_STANDARD))
    Q = Q_from_monge(gbar)
    printed = [[parse_expr(x) for x in r] for r in fixtures.N2_Q]
    flip = {"c5": Polynomial.var("c5").scale(-1)}
    Qm = [[Q.Q[i][j] for j in range(3)] for i in range(3)]
    if Qm == printed:
        conv = "matches the printed quadric"
    elif Qm == [[x.subs(flip) for x in r] for r in printed]:
        conv = "matches the printed quadric after c5 -> -c5"
    else:
        raise ClassificationError(f"quadric {Qm} does not match the printed one")
    R = curvature(fam.g, fam.gamma)
    curv = {tuple(i + 1 for i in k): v for k, v in R.independent_nonzero().items()}
    if check and curv != {(1, 2, 1, 2): Polynomial.var("c0").scale(-1)}:
        raise ClassificationError(f"curvature {curv}")
    local = [[x.subs({"c0": Polynomial.const(0)}) for x in r] for r in metric]
    affine_row = {(0, 0): "c1*u1 + c2", (0, 1): "1/2*c3*u1 + 1/2*c1*u2 + c5", (1, 1): "c3*u2 + c4"}
    if check and any(local[i][j] != parse_expr(e) for (i, j), e in affine_row.items()):
        raise ClassificationError("c0 = 0 does not give the affine-classification row")
    return N2Classification(br, metric, basis, tail, Qm, conv, curv, local, fwd.substitution,
                            time.monotonic() - t0)
