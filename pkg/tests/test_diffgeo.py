import random
from itertools import product

import pytest
from hypothesis import given, strategies as st

from hamtrio import fixtures, numeric
from hamtrio.diffgeo import (
    COVARIANT, Metric, SkewForm, curvature, is_flat, levi_civita, lower_with_eta,
    monge_check, monge_check_contravariant, raise_with_eta,
)
from hamtrio.hamops import FirstOrderOperator, gamma_from_bw, gamma_symmetry_residuals, \
    metric_compatibility_residuals
from hamtrio.projgeo import QuadricMatrix, monge_from_Q
from hamtrio.symcore import DegenerateMatrixError, LinearSystem, Polynomial, parse_expr, solve_linear
from hamtrio.symcore.linalg import split_with_monomials

P = parse_expr
ETA = SkewForm(fixtures.ETA_2)
ETA_STD = SkewForm(fixtures.ETA_2_STANDARD)


def metric(rows, variance="contravariant"):
    return Metric([[P(x) for x in r] for r in rows], variance)


KB_G2 = metric([["2", "u1"], ["u1", "2*u2"]])


def n2_family_metric(**values):
    g = fixtures.n2_family()["P"].g
    return g.subs({k: Polynomial.const(v) for k, v in values.items()}) if values else g


# -- Levi-Civita connection --------------------------------------------------------------

def test_constant_metric_has_zero_connection():
    assert not levi_civita(metric([["1", "2"], ["2", "-3"]])).nonzero()


def test_kaup_broer_connection():
    G = levi_civita(KB_G2)
    assert {k: str(v) for k, v in G.nonzero().items()} == {(0, 1, 0): "1", (1, 1, 1): "1"}


def test_family_connection_has_affine_form():
    """The family's connection equals gamma_from_bw with w = -c0/2 Id and a constant b."""
    fam = fixtures.n2_family()["P"]
    G = levi_civita(fam.g)
    half_c0 = P("-1/2*c0")
    w = [[half_c0, P("0")], [P("0"), half_c0]]
    names = [f"b{k}{j}_{l}" for k, j, l in product((1, 2), repeat=3)]
    b = [[[P(f"b{k + 1}{j + 1}_{l + 1}") for l in range(2)] for j in range(2)] for k in range(2)]
    A = gamma_from_bw(b, w)
    rows = []
    for idx in product(range(2), repeat=3):
        d = G[idx] - A[idx]
        num = d.num if hasattr(d, "num") else d
        rows.extend(c for _, c in split_with_monomials(num, ("u1", "u2")) if not c.is_zero)
    sol = solve_linear(LinearSystem(tuple(names), rows))
    assert sol.consistent and not sol.free
    assert all(v.variables() <= {"c1", "c3"} for v in sol.substitution.values())


@pytest.mark.parametrize("g", [
    KB_G2,
    metric([["u1", "0"], ["0", "1"]]),
    metric([["u2", "u1"], ["u1", "1"]]),
    n2_family_metric(),
])
def test_levi_civita_satisfies_hamiltonian_connection_conditions(g):
    G = levi_civita(g)
    assert all(r.is_zero for _, r in gamma_symmetry_residuals(g, G))
    assert all(r.is_zero for _, r in metric_compatibility_residuals(g, G))


@st.composite
def linear_metrics(draw):
    """Symmetric 2x2 metrics with affine entries and a nonzero constant determinant part."""
    def aff():
        a, b, c = (draw(st.integers(-3, 3)) for _ in range(3))
        return Polynomial.const(a) * P("u1") + Polynomial.const(b) * P("u2") + Polynomial.const(c)
    g11, g12, g22 = aff(), aff(), aff()
    g = Metric([[g11, g12], [g12, g22]])
    try:
        if g.det.is_zero:
            return Metric([[P("1"), P("0")], [P("0"), P("1")]])
    except AttributeError:
        pass
    return g


@given(linear_metrics())
def test_levi_civita_conditions_random(g):
    if (g[0, 0] * g[1, 1] - g[0, 1] * g[0, 1]).is_zero:
        return
    G = levi_civita(g)
    assert all(r.is_zero for _, r in gamma_symmetry_residuals(g, G))
    assert all(r.is_zero for _, r in metric_compatibility_residuals(g, G))


# -- curvature ----------------------------------------------------------------------------

def test_constant_metric_zero_curvature():
    assert curvature(metric([["1", "0"], ["0", "-1"]])).is_zero


def test_family_curvature_single_component():
    R = curvature(n2_family_metric())
    assert {k: str(v) for k, v in R.independent_nonzero().items()} == {(0, 1, 0, 1): "-c0"}


def test_kaup_broer_flat():
    assert curvature(KB_G2).is_zero


def test_curvature_skew_in_lower_and_upper_pairs():
    g = metric([["1 + u1^2", "u2"], ["u2", "2 + u1"]])
    R = curvature(g)
    for j, k, s, l in product(range(2), repeat=4):
        assert (R[j, k, s, l] + R[j, k, l, s]).is_zero
        assert (R[j, k, s, l] + R[k, j, s, l]).is_zero


def test_first_bianchi_on_mixed_form():
    """R^j_{[asl]} = 0 computed from R^{jk}_{sl} lowered on k."""
    g = metric([["1 + u1^2", "u2", "0"], ["u2", "2 + u1", "u3"], ["0", "u3", "1"]])
    R = curvature(g)
    low = g.inverse_entries
    n = 3
    rng = random.Random(0)
    for _ in range(12):
        j, a, s, l = (rng.randrange(n) for _ in range(4))
        def mixed(a_, s_, l_):
            acc = 0
            for k in range(n):
                if not R[j, k, s_, l_].is_zero and not low[k][a_].is_zero:
                    acc = acc + low[k][a_] * R[j, k, s_, l_]
            return acc
        tot = mixed(a, s, l) + mixed(s, l, a) + mixed(l, a, s)
        assert tot == 0 or tot.is_zero


def test_flat_iff_c0_vanishes():
    assert is_flat(n2_family_metric(c0=0))
    res = is_flat(n2_family_metric(c0=1, c1=0, c2=1, c3=0, c4=1, c5=0))
    assert not res
    assert res.witness[0] == (1, 2, 1, 2) and str(res.witness[1]) == "-1"
    assert is_flat(metric([["1", "0"], ["0", "1"]]))


def test_degenerate_metric_is_rejected():
    with pytest.raises(DegenerateMatrixError):
        levi_civita(metric([["u1", "u1"], ["u1", "u1"]]))


# -- lowering with eta, Monge condition ---------------------------------------------------

def test_lower_kaup_broer_p1():
    gbar = lower_with_eta(metric([["0", "1"], ["1", "0"]]), ETA)
    assert [[str(x) for x in r] for r in gbar.entries] == [["0", "-1"], ["-1", "0"]]


def test_lower_kaup_broer_p2():
    gbar = lower_with_eta(KB_G2, ETA)
    assert [[str(x) for x in r] for r in gbar.entries] == [["2*u2", "-u1"], ["-u1", "2"]]


def test_lower_identity_with_rotation():
    gbar = lower_with_eta(metric([["1", "0"], ["0", "1"]]), ETA_STD)
    assert [[str(x) for x in r] for r in gbar.entries] == [["1", "0"], ["0", "1"]]


def test_raise_examples():
    g = raise_with_eta(metric([["0", "-1"], ["-1", "0"]], COVARIANT), ETA)
    assert [[str(x) for x in r] for r in g.entries] == [["0", "1"], ["1", "0"]]
    z = raise_with_eta(metric([["0", "0"], ["0", "0"]], COVARIANT), ETA)
    assert all(x.is_zero for r in z.entries for x in r)


def test_raise_monge_family_gives_family():
    # the quoted covariant family and the contravariant one differ in the sign of c5
    gbar = Metric([[P(fixtures.N2_MONGE[min(i, j) + 1, max(i, j) + 1]) for j in range(2)] for i in range(2)],
                  COVARIANT)
    g = raise_with_eta(gbar, ETA_STD)
    assert g.subs({"c5": P("-c5")}) == fixtures.n2_family()["P"].g


@st.composite
def quadratic_metrics(draw, n=2):
    def quad():
        p = Polynomial.const(0)
        for mono in ("1", "u1", "u2", "u1^2", "u1*u2", "u2^2"):
            p = p + Polynomial.const(draw(st.integers(-3, 3))) * P(mono)
        return p
    rows = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            rows[i][j] = rows[j][i] = quad()
    return Metric(rows)


@given(quadratic_metrics())
def test_eta_round_trip(g):
    for eta in (ETA, ETA_STD, SkewForm([[0, 3], [-3, 0]])):
        assert raise_with_eta(lower_with_eta(g, eta), eta) == g


@given(quadratic_metrics())
def test_monge_check_agrees_with_contravariant_form(g):
    assert bool(monge_check(lower_with_eta(g, ETA))) == bool(monge_check_contravariant(g, ETA))


def test_monge_check_examples():
    assert monge_check(lower_with_eta(KB_G2, ETA))
    res = monge_check(metric([["u1", "0"], ["0", "0"]], COVARIANT))
    assert not res and res.triple == (1, 1, 1)


def test_random_quadric_gives_monge_metric_in_four_dimensions():
    rng = random.Random(5)
    N = 10
    Q = [[0] * N for _ in range(N)]
    for a in range(N):
        for b in range(a, N):
            Q[a][b] = Q[b][a] = rng.randint(-3, 3)
    assert monge_check(monge_from_Q(QuadricMatrix(4, Q)))


def test_skew_form_validation():
    with pytest.raises(ValueError):
        SkewForm([[0, 1], [1, 0]])
    with pytest.raises(ValueError):
        SkewForm([[0, 1, 0], [-1, 0, 0], [0, 0, 0]])
    with pytest.raises(DegenerateMatrixError):
        SkewForm([[0, 0], [0, 0]])


# -- finite-difference oracle ---------------------------------------------------------------

@pytest.mark.parametrize("make", [
    lambda: FirstOrderOperator(KB_G2),
    lambda: fixtures.n2_family()["P"],
    lambda: FirstOrderOperator(metric([["1 + u1^2", "u2"], ["u2", "2 + u1"]])),
    lambda: fixtures.n4_nonlocal()["Q1"],
])
def test_christoffel_matches_finite_differences(make):
    op = make()
    assert numeric.compare_christoffel(op, points=10, tol=1e-6)


@pytest.mark.parametrize("make", [
    lambda: FirstOrderOperator(KB_G2),
    lambda: fixtures.n2_family()["P"],
    lambda: FirstOrderOperator(metric([["1 + u1^2", "u2"], ["u2", "2 + u1"]])),
])
def test_curvature_matches_finite_differences(make):
    op = make()
    assert numeric.compare_curvature(op, curvature(op.g, op.gamma), points=10, tol=1e-6)
