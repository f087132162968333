import logging
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, strategies as st

from hamtrio import fixtures, numeric
from hamtrio.diffgeo import Christoffel, DimensionError, Metric, SkewForm, lower_with_eta, monge_check
from hamtrio.hamops import (
    DegeneratePencilError, FirstOrderOperator, SecondOrderConstantOperator, affine_residuals,
    cf_algebra_check, compat_with_R2, extract_b, gamma_from_bw, hamiltonian_check, pencil_compat,
    trio_verify,
)
from hamtrio.symcore import DegenerateMatrixError, Polynomial, parse_expr
from hamtrio.symcore.linalg import split_by_field_vars

P = parse_expr
R_STD = SecondOrderConstantOperator(SkewForm(fixtures.ETA_2_STANDARD))
R4 = fixtures.n4_eta()["R"]


def op2(rows, gamma=None, w=None):
    g = Metric([[P(x) for x in r] for r in rows])
    return FirstOrderOperator(g, gamma, w)


def family_member(**c):
    fam = fixtures.n2_family()["P"]
    return fam.subs({k: Polynomial.const(Fraction(v)) for k, v in c.items()})


@pytest.fixture(autouse=True)
def quiet_warnings(caplog):
    caplog.set_level(logging.ERROR, logger="hamtrio")


# -- Hamiltonianity ---------------------------------------------------------------------

def test_kaup_broer_p2_is_hamiltonian():
    assert hamiltonian_check(fixtures.kaup_broer()["P2"]).passed


def test_constant_operator_is_hamiltonian():
    P0 = FirstOrderOperator(Metric([[P("1"), P("3")], [P("3"), P("-2")]]), Christoffel.zero(2))
    assert hamiltonian_check(P0).passed


def test_curved_local_metric_fails_curvature_tail():
    rep = hamiltonian_check(op2([["1", "0"], ["0", "u1"]]))
    fail = rep.first_failure()
    assert fail is not None and fail.name == "curvature_tail"
    assert not fail.residual.is_zero


def test_hamiltonian_check_rejects_degenerate_metric():
    with pytest.raises(DegenerateMatrixError):
        hamiltonian_check(op2([["u1", "u1"], ["u1", "u1"]], Christoffel.zero(2)))


def test_tail_must_be_constant():
    with pytest.raises(ValueError):
        op2([["1", "0"], ["0", "1"]], w=[[P("u1"), P("0")], [P("0"), P("0")]])


def test_n2_family_hamiltonian_with_given_and_derived_connection():
    assert hamiltonian_check(fixtures.n2_family()["P"]).passed
    assert hamiltonian_check(fixtures.n2_family(derive_gamma=False)["P"]).passed


# -- compatibility with eta D^2 -----------------------------------------------------------

def test_n2_family_compatible_with_R2():
    rep = compat_with_R2(fixtures.n2_family()["P"], R_STD)
    assert rep.ok, rep.summary()


def test_family_without_tail_fails_affine_condition():
    fam = fixtures.n2_family()["P"]
    bad = FirstOrderOperator(fam.g, None, None)
    rep = compat_with_R2(bad, R_STD)
    assert rep.first_failure().name == "affine_gamma"
    assert "not_hamiltonian (curvature_tail)" in rep.flags


def test_symbolic_tail_residual_forces_c0():
    fam = fixtures.n2_family()["P"]
    w = [[P("w1_1"), P("0")], [P("0"), P("w1_1")]]
    rep = compat_with_R2(FirstOrderOperator(fam.g, None, w), R_STD)
    fail = rep.first_failure()
    assert fail.name == "affine_gamma"
    assert split_by_field_vars(fail.residual, ("u1", "u2")) == [P("c0 + 2*w1_1")]


def test_enforced_hamiltonian_precondition():
    fam = fixtures.n2_family()["P"]
    with pytest.raises(ValueError):
        compat_with_R2(FirstOrderOperator(fam.g), R_STD, enforce_hamiltonian=True)


def test_n4_local_fixture_compatible():
    assert compat_with_R2(fixtures.n4_local()["Q1"], R4).ok


def test_n4_nonlocal_fixture_compatible():
    assert compat_with_R2(fixtures.n4_nonlocal()["Q1"], R4).ok


def test_noncyclic_fixture_fails_only_cyclic():
    fx = fixtures.n4_noncyclic()
    assert hamiltonian_check(fx["Q1"]).passed
    rep = compat_with_R2(fx["Q1"], fx["R"])
    failed = [c.name for c in rep.conditions if not c.passed]
    assert failed == ["cyclic"]
    assert rep["cyclic"].indices == (1, 2, 3) and rep["cyclic"].residual == P("1/2*u1")


def test_odd_dimension_and_mismatch():
    with pytest.raises(DimensionError):
        SkewForm([[0, 1, 0], [-1, 0, 0], [0, 0, 0]])
    with pytest.raises(DimensionError):
        compat_with_R2(fixtures.n2_family()["P"], R4)


@pytest.mark.parametrize("c", [Fraction(2), Fraction(-1, 3), Fraction(7, 5)])
def test_compat_invariant_under_eta_scaling(c):
    for Pop, R in [(fixtures.n2_family()["P"], R_STD), (fixtures.n4_noncyclic()["Q1"], R4)]:
        base = compat_with_R2(Pop, R)
        scaled = compat_with_R2(Pop, SecondOrderConstantOperator(R.eta.scaled(c)))
        assert [x.passed for x in base.conditions] == [x.passed for x in scaled.conditions]


def test_compatible_operators_have_monge_metrics():
    for Pop, R in [(fixtures.n2_family()["P"], R_STD), (fixtures.n4_local()["Q1"], R4),
                   (fixtures.n4_nonlocal()["Q1"], R4), (fixtures.kaup_broer()["P2"], fixtures.kaup_broer()["R"])]:
        assert compat_with_R2(Pop, R).passed
        assert monge_check(lower_with_eta(Pop.g, R.eta))


def test_compatible_operators_restate_affine_form():
    for Pop in (fixtures.n2_family()["P"], fixtures.n4_nonlocal()["Q1"], fixtures.n4_local()["Q1"]):
        G, w = Pop.gamma, Pop.w
        assert all(r.is_zero for _, r in affine_residuals(G, w))
        model = gamma_from_bw(extract_b(G), w)
        n = Pop.n
        assert all((G[idx] - model[idx]).is_zero for idx in product(range(n), repeat=3))


# -- cyclic Frobenius algebra ---------------------------------------------------------------

def test_zero_product_is_cyclic_frobenius():
    assert cf_algebra_check(Christoffel.zero(2), SkewForm(fixtures.ETA_2_STANDARD)).passed


def test_n4_local_christoffels_form_cyclic_frobenius_algebra():
    assert cf_algebra_check(fixtures.n4_local()["Q1"].gamma, R4.eta).passed


def test_single_symbol_fails_cocycle():
    G = Christoffel.from_entries(2, {(0, 1, 0): P("1")})
    fail = cf_algebra_check(G, SkewForm(fixtures.ETA_2_STANDARD)).first_failure()
    assert fail.name == "cocycle" and fail.indices == (1, 2, 2) and fail.residual == P("1")


# -- affine Christoffel symbols ----------------------------------------------------------------

def test_gamma_from_bw_without_tail_is_b():
    b = fixtures.b_array(4, fixtures.N4_LOCAL_B)
    zero = [[P("0")] * 4 for _ in range(4)]
    G = gamma_from_bw(b, zero)
    assert G == fixtures.n4_local()["Q1"].gamma


def test_gamma_from_bw_reproduces_nonlocal_list():
    b = fixtures.b_array(4, fixtures.N4_NONLOCAL_B)
    w = fixtures._tail(4, fixtures.N4_NONLOCAL_TAIL)
    assert gamma_from_bw(b, w) == fixtures.n4_nonlocal()["Q1"].gamma


def test_gamma_from_bw_gives_family_connection():
    fam = fixtures.n2_family()["P"]
    G = fam.gamma
    assert gamma_from_bw(extract_b(G), fam.w) == G


# -- pencils and trios ----------------------------------------------------------------------

def test_kaup_broer_pencil():
    kb = fixtures.kaup_broer()
    assert pencil_compat(kb["P1"], kb["P2"]).ok


def test_two_family_members_compatible():
    A = family_member(c0=1, c1=2, c2=-1, c3=0, c4=3, c5="1/2")
    B = family_member(c0=-2, c1=0, c2=1, c3=1, c4=0, c5=1)
    assert pencil_compat(A, B).ok


def test_symbolic_family_pencil():
    fam = fixtures.n2_family()["P"]
    other = fam.subs({f"c{i}": P(f"d{i}") for i in range(6)})
    assert pencil_compat(fam, other).ok


def test_screened_pair_incompatible():
    fx = fixtures.screened_pair()
    assert hamiltonian_check(fx["X"]).passed
    rep = pencil_compat(fx["P1"], fx["X"])
    assert not rep.passed and not rep.flags
    assert not numeric.check_pencil(fx["P1"], fx["X"], points=5)


def test_pencil_symmetric_and_self_compatible():
    kb = fixtures.kaup_broer()
    fx = fixtures.screened_pair()
    for A, B in [(kb["P1"], kb["P2"]), (fx["P1"], fx["X"])]:
        assert pencil_compat(A, B).passed == pencil_compat(B, A).passed
    for X in (kb["P2"], fx["X"], fixtures.n2_family()["P"]):
        assert pencil_compat(X, X).passed


def test_pencil_of_n4_local_with_p1():
    assert pencil_compat(fixtures.n4_p1()["P1"], fixtures.n4_local()["Q1"]).ok


def test_degenerate_pencil_is_an_error():
    A = op2([["1", "0"], ["0", "0"]], Christoffel.zero(2))
    B = op2([["2", "0"], ["0", "0"]], Christoffel.zero(2))
    with pytest.raises(DegeneratePencilError):
        pencil_compat(A, B)


def test_trios():
    kb = fixtures.kaup_broer()
    assert trio_verify(kb["P1"], kb["P2"], kb["R"]).ok
    ak = fixtures.akns()
    assert trio_verify(ak["P1"], ak["Q1"], ak["R"]).ok


def test_trio_with_screened_operator_fails_at_pencil():
    fx = fixtures.screened_pair()
    rep = trio_verify(fx["P1"], fx["X"], fx["R"])
    assert not rep.passed
    assert any(c.name.startswith("P.Q:") and not c.passed for c in rep.conditions)
    assert all(c.passed for c in rep.conditions if c.name.startswith("P.hamiltonian:"))
    assert all(c.passed for c in rep.conditions if c.name.startswith("Q.hamiltonian:"))


# -- numeric oracle on random family members ---------------------------------------------------

@given(st.lists(st.integers(-5, 5), min_size=6, max_size=6))
def test_family_members_pass_symbolically_and_numerically(cs):
    if cs[0] == 0 and cs[1] == 0 and cs[3] == 0 and cs[2] * cs[4] - cs[5] ** 2 == 0:
        return  # constant degenerate metric
    X = family_member(**{f"c{i}": v for i, v in enumerate(cs)})
    try:
        rep = compat_with_R2(X, R_STD)
    except DegenerateMatrixError:
        return
    assert rep.ok
    assert numeric.check_compat(X, fixtures.ETA_2_STANDARD, points=3)
