import random

import pytest
from hypothesis import given, strategies as st

from hamtrio import fixtures
from hamtrio.diffgeo import COVARIANT, Metric, SkewForm, lower_with_eta, monge_check
from hamtrio.projgeo import (
    NotMongeError, PluckerBasis, QuadricMatrix, Q_from_monge, conic_rank, congruence_transform,
    gauge_difference_in_span, linear_congruence, monge_from_Q, monge_space_dimension, plucker_relations,
    relation_matrices,
)
from hamtrio.symcore import parse_expr
from hamtrio.symcore.linalg import rank

P = parse_expr
KB = fixtures.kaup_broer()
AKNS = fixtures.akns()


def quadric_of(op, R):
    return Q_from_monge(lower_with_eta(op.g, R.eta))


def strs(Q):
    return [[str(x) for x in r] for r in Q.Q]


def random_symmetric(N, rng, lo=-3, hi=3):
    M = [[0] * N for _ in range(N)]
    for a in range(N):
        for b in range(a, N):
            M[a][b] = M[b][a] = rng.randint(lo, hi)
    return M


def test_basis_sizes_and_lie_order():
    assert [len(PluckerBasis(n)) for n in (2, 3, 4)] == [3, 6, 10]
    assert PluckerBasis(2).describe() == ["u1*du2 - u2*du1", "du1", "du2"]


def test_monge_family_from_printed_quadric():
    Q = QuadricMatrix(2, [[P(x) for x in r] for r in fixtures.N2_Q])
    g = monge_from_Q(Q)
    expect = {k: P(v) for k, v in fixtures.N2_MONGE.items()}
    assert g[0, 0] == expect[1, 1] and g[1, 1] == expect[2, 2]
    assert g[0, 1] == expect[1, 2]


def test_zero_quadric_gives_zero_metric():
    g = monge_from_Q(QuadricMatrix(2, [[0] * 3 for _ in range(3)]))
    assert all(x.is_zero for r in g.entries for x in r)


def test_kaup_broer_q2_expands_to_its_monge_metric():
    g = monge_from_Q(QuadricMatrix(2, [[0, -1, 0], [-1, 0, 0], [0, 0, 2]]))
    assert [[str(x) for x in r] for r in g.entries] == [["2*u2", "-u1"], ["-u1", "2"]]


def test_kaup_broer_quadrics():
    # the computed Q1 is the printed one up to an overall sign, consistent with the printed metric
    assert strs(quadric_of(KB["P1"], KB["R"])) == [["0", "0", "0"], ["0", "0", "-1"], ["0", "-1", "0"]]
    assert strs(quadric_of(KB["P2"], KB["R"])) == [["0", "-1", "0"], ["-1", "0", "0"], ["0", "0", "2"]]


def test_zero_metric_gives_zero_quadric():
    z = Metric([[P("0")] * 2 for _ in range(2)], COVARIANT)
    assert all(x.is_zero for r in Q_from_monge(z).Q for x in r)


def test_non_monge_metric_rejected():
    with pytest.raises(NotMongeError):
        Q_from_monge(Metric([[P("u1"), P("0")], [P("0"), P("0")]], COVARIANT))


def test_conic_ranks():
    assert conic_rank(quadric_of(KB["P1"], KB["R"])) == 2
    assert conic_rank(quadric_of(KB["P2"], KB["R"])) == 3
    assert conic_rank(quadric_of(AKNS["Q1_remark"], AKNS["R"])) == 2
    assert strs(quadric_of(AKNS["Q1_remark"], AKNS["R"])) == [["0", "1", "0"], ["1", "2", "0"], ["0", "0", "0"]]


def test_conic_rank_needs_numeric_n2():
    fam = fixtures.n2_family()
    with pytest.raises(ValueError):
        conic_rank(quadric_of(fam["P"], fam["R"]))
    with pytest.raises(ValueError):
        conic_rank(QuadricMatrix(4, [[0] * 10 for _ in range(10)]))


def test_plucker_relation_counts():
    assert plucker_relations(2) == []
    assert len(plucker_relations(3)) == 1
    assert len(plucker_relations(4)) == 5
    assert str(plucker_relations(3)[0]) == "p12*p34 - p13*p24 + p14*p23"


def test_linear_congruence_of_four_component_eta():
    eqs = [str(e) for e in linear_congruence(fixtures.n4_eta()["R"].eta).equations]
    assert eqs == ["p14 + p23", "p15", "p25", "p35", "p45"]


def test_linear_congruence_two_components_degenerates():
    cs = linear_congruence(SkewForm(fixtures.ETA_2_STANDARD))
    assert cs.degenerate and cs.solution_dim == 0


def test_linear_congruence_block_diagonal():
    cs = linear_congruence(SkewForm.standard(4))
    assert len(cs.equations) == 5 and cs.rank == 5


def test_congruence_transform_examples():
    Q1 = quadric_of(KB["P1"], KB["R"])
    I3 = [[int(i == j) for j in range(3)] for i in range(3)]
    assert congruence_transform(Q1, I3).Q == Q1.Q
    D = [[2, 0, 0], [0, 1, 0], [0, 0, 1]]
    assert conic_rank(congruence_transform(Q1, D)) == 2
    with pytest.raises(ValueError):
        congruence_transform(Q1, [[1, 1, 0], [1, 1, 0], [0, 0, 1]])


def test_rank_invariant_under_random_congruences():
    rng = random.Random(7)
    Q2 = quadric_of(KB["P2"], KB["R"])
    Q1 = quadric_of(KB["P1"], KB["R"])
    done = 0
    while done < 50:
        A = [[rng.randint(-3, 3) for _ in range(3)] for _ in range(3)]
        if rank(A) < 3:
            continue
        assert conic_rank(congruence_transform(Q2, A)) == 3
        assert conic_rank(congruence_transform(Q1, A)) == 2
        done += 1


@given(st.integers(0, 10 ** 6))
def test_round_trip_n2(seed):
    rng = random.Random(seed)
    Q = QuadricMatrix(2, random_symmetric(3, rng))
    back = Q_from_monge(monge_from_Q(Q))
    assert back.Q == Q.Q


@given(st.integers(0, 10 ** 6))
def test_round_trip_modulo_gauge_n3(seed):
    rng = random.Random(seed)
    Q = QuadricMatrix(3, random_symmetric(6, rng))
    g = monge_from_Q(Q)
    assert monge_check(g)
    back = Q_from_monge(g)
    assert monge_from_Q(back) == g
    assert gauge_difference_in_span(back, Q)


def test_round_trip_modulo_gauge_n4():
    rng = random.Random(11)
    for _ in range(3):
        Q = QuadricMatrix(4, random_symmetric(10, rng))
        g = monge_from_Q(Q)
        back = Q_from_monge(g)
        assert monge_from_Q(back) == g
        assert gauge_difference_in_span(back, Q)
        assert back.gauge_dim == 5


def test_relation_matrices_reproduce_relations():
    for n in (3, 4):
        for K in relation_matrices(n):
            assert all(x.is_zero for r in monge_from_Q(QuadricMatrix(n, K)).entries for x in r)


def test_monge_space_dimensions():
    assert monge_space_dimension(2) == 6
    assert monge_space_dimension(3) == 20
    assert monge_space_dimension(4) == 50
