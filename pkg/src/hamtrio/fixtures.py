"""Operators transcribed from the published examples.

Entries are written as expressions so they can be compared by eye with the
printed matrices; indices below are 1-based like the printed ones.
"""

from __future__ import annotations

from dataclasses import dataclass

from hamtrio.diffgeo import Christoffel, Metric, SkewForm
from hamtrio.hamops import FirstOrderOperator, SecondOrderConstantOperator
from hamtrio.symcore.parse import parse_expr


def _metric(n: int, entries: dict) -> Metric:
    """Upper-triangular 1-based entries ``{(i, j): expr}``."""
    rows = [[parse_expr("0")] * n for _ in range(n)]
    for (i, j), e in entries.items():
        v = parse_expr(e) if isinstance(e, str) else parse_expr(str(e))
        rows[i - 1][j - 1] = rows[j - 1][i - 1] = v
    return Metric(rows)


def _gamma(n: int, entries: dict) -> Christoffel:
    return Christoffel.from_entries(n, {(i - 1, j - 1, k - 1): parse_expr(e) for (i, j, k), e in entries.items()})


def _tail(n: int, entries: dict):
    w = [[parse_expr("0")] * n for _ in range(n)]
    for (i, j), e in entries.items():
        w[i - 1][j - 1] = parse_expr(e)
    return w


def _eta(rows) -> SecondOrderConstantOperator:
    return SecondOrderConstantOperator(SkewForm(rows))


ETA_2 = [[0, -1], [1, 0]]  # the second-order part of the two-component examples
ETA_2_STANDARD = [[0, 1], [-1, 0]]  # the one used in the n=2 classification
ETA_4 = [[0, 0, 0, -1], [0, 0, -1, 0], [0, 1, 0, 0], [1, 0, 0, 0]]


def kaup_broer():
    P1 = FirstOrderOperator(_metric(2, {(1, 2): "1"}), _gamma(2, {}), name="P1")
    P2 = FirstOrderOperator(_metric(2, {(1, 1): "2", (1, 2): "u1", (2, 2): "2*u2"}),
                            _gamma(2, {(1, 2, 1): "1", (2, 2, 2): "1"}), name="P2")
    return {"P1": P1, "P2": P2, "R": _eta(ETA_2)}


def akns():
    """The trio of the two-component display, plus the operator behind the rank-2 conic of the remark."""
    P1 = FirstOrderOperator(_metric(2, {(1, 2): "1"}), _gamma(2, {}), name="P1")
    Q1 = FirstOrderOperator(_metric(2, {(1, 1): "2*u1", (1, 2): "u2", (2, 2): "-2"}),
                            _gamma(2, {(1, 1, 1): "1", (2, 1, 2): "1"}), name="Q1")
    # raised from Q = [[0, 1, 0], [1, 2, 0], [0, 0, 0]] with the same eta
    Q1r = FirstOrderOperator(_metric(2, {(1, 2): "-u1", (2, 2): "2 - 2*u2"}),
                             _gamma(2, {(1, 2, 1): "-1", (2, 1, 1): "0", (2, 2, 2): "-1"}), name="Q1_remark")
    return {"P1": P1, "Q1": Q1, "Q1_remark": Q1r, "R": _eta(ETA_2)}


N2_PARAMS = ("c0", "c1", "c2", "c3", "c4", "c5")
N2_METRIC = {
    (1, 1): "c0*u1^2 + c1*u1 + c2",
    (1, 2): "c0*u1*u2 + 1/2*c3*u1 + 1/2*c1*u2 + c5",
    (2, 2): "c0*u2^2 + c3*u2 + c4",
}
N2_MONGE = {  # the covariant family quoted alongside
    (1, 1): "c0*u2^2 + c3*u2 + c4",
    (1, 2): "-c0*u1*u2 - 1/2*c3*u1 - 1/2*c1*u2 + c5",
    (2, 2): "c0*u1^2 + c1*u1 + c2",
}
N2_Q = [["c0", "-1/2*c3", "1/2*c1"], ["-1/2*c3", "c4", "c5"], ["1/2*c1", "c5", "c2"]]


def n2_family(derive_gamma: bool = True):
    g = _metric(2, N2_METRIC)
    w = _tail(2, {(1, 1): "-1/2*c0", (2, 2): "-1/2*c0"})
    gamma = None if derive_gamma else _gamma(2, {
        (1, 1, 1): "c0*u1 + 1/2*c1", (1, 2, 1): "c0*u2 + 1/2*c3",
        (2, 1, 2): "c0*u1 + 1/2*c1", (2, 2, 2): "c0*u2 + 1/2*c3"})
    return {"P": FirstOrderOperator(g, gamma, w, name="P"), "R": _eta(ETA_2_STANDARD)}


def n4_eta():
    return {"R": _eta(ETA_4)}


def n4_p1():
    return {"P1": FirstOrderOperator(_metric(4, {(1, 2): "1", (3, 4): "1"}), _gamma(4, {}), name="P1")}


N4_LOCAL_PARAMS = ("b11_2", "b13_1", "c31", "c34", "c46", "c49", "c54", "c55")
N4_LOCAL_METRIC = {
    (1, 1): "2*b11_2*u2 + c55", (1, 2): "c54", (1, 3): "b11_2*u4 + b13_1*u1 - c49", (1, 4): "b13_1*u2 - c34",
    (2, 2): "0", (2, 3): "b13_1*u2 - c34", (2, 4): "0",
    (3, 3): "2*b13_1*u3 + c46", (3, 4): "2*b13_1*u4 + c31",
    (4, 4): "0",
}
N4_LOCAL_GAMMA = {
    (1, 1, 2): "b11_2", (1, 3, 1): "b13_1", (1, 4, 2): "b13_1", (2, 3, 2): "b13_1",
    (3, 1, 4): "b11_2", (3, 3, 3): "b13_1", (3, 4, 4): "b13_1", (4, 3, 4): "b13_1",
}
N4_LOCAL_B = {  # only nonzero constants b^{kj}_l, written in terms of the free ones
    (1, 1, 2): "b11_2", (1, 3, 1): "b13_1",
    (1, 4, 2): "b13_1", (2, 3, 2): "b13_1", (3, 1, 4): "b11_2",
    (3, 3, 3): "b13_1", (3, 4, 4): "b13_1", (4, 3, 4): "b13_1",
}


def n4_local():
    op = FirstOrderOperator(_metric(4, N4_LOCAL_METRIC), _gamma(4, N4_LOCAL_GAMMA), name="Q1")
    return {"Q1": op}


N4_NONLOCAL_PARAMS = ("b22_1", "w2_1", "c28", "c31", "c33", "c34", "c53", "c54")
N4_NONLOCAL_METRIC = {
    (1, 1): "0", (1, 2): "c54 - u1^2*w2_1", (1, 3): "0", (1, 4): "-(c34 + u1*u3*w2_1)",
    (2, 2): "2*b22_1*u1 + c53 - 2*u1*u2*w2_1", (2, 3): "-(c34 + u1*u3*w2_1)",
    (2, 4): "b22_1*u3 - c33 - u1*u4*w2_1 - u2*u3*w2_1",
    (3, 3): "0", (3, 4): "c31 - u3^2*w2_1", (4, 4): "c28 - 2*u3*u4*w2_1",
}
N4_NONLOCAL_GAMMA = {
    (1, 2, 1): "-u1*w2_1", (1, 4, 1): "-u3*w2_1", (2, 1, 1): "-u1*w2_1", (2, 2, 1): "b22_1 - u2*w2_1",
    (2, 2, 2): "-u1*w2_1", (2, 3, 1): "-u3*w2_1", (2, 4, 1): "-u4*w2_1", (2, 4, 2): "-u3*w2_1",
    (3, 2, 3): "-u1*w2_1", (3, 4, 3): "-u3*w2_1", (4, 1, 3): "-u1*w2_1", (4, 2, 3): "b22_1 - u2*w2_1",
    (4, 2, 4): "-u1*w2_1", (4, 3, 3): "-u3*w2_1", (4, 4, 3): "-u4*w2_1", (4, 4, 4): "-u3*w2_1",
}
N4_NONLOCAL_TAIL = {(2, 1): "w2_1", (4, 3): "w2_1"}
N4_NONLOCAL_B = {(2, 2, 1): "b22_1", (4, 2, 3): "b22_1"}


def n4_nonlocal():
    op = FirstOrderOperator(_metric(4, N4_NONLOCAL_METRIC), _gamma(4, N4_NONLOCAL_GAMMA),
                            _tail(4, N4_NONLOCAL_TAIL), name="Q1")
    return {"Q1": op}


def n4_noncyclic():
    """Hamiltonian, Monge, tail and Christoffel of the affine form, yet not cyclic for ETA_4.

    Found by the solver: it satisfies every linear and associativity condition
    except the cyclic one, which fails with residual u1/2 at (1, 2, 3).
    """
    g = {(i, j): f"1/2*u{i}*u{j}" for i in range(1, 5) for j in range(i, 5)}
    g[(1, 1)], g[(2, 2)], g[(3, 3)], g[(4, 4)] = "1/2*u1^2", "1/2*u2^2", "1/2*u3^2", "1/2*u4^2"
    g[(1, 4)] = "1/2*u1*u4 - 1"
    g[(2, 3)] = "1/2*u2*u3 - 1"
    gamma = {(i, j, i): f"1/2*u{j}" for i in range(1, 5) for j in range(1, 5)}
    w = {(i, i): "-1/4" for i in range(1, 5)}
    return {"Q1": FirstOrderOperator(_metric(4, g), _gamma(4, gamma), _tail(4, w), name="Q1"), "R": _eta(ETA_4)}


SCREENED_METRIC = {  # scripts/screen_pencils.py --seed 3, first hit
    (1, 1): "2*u1^2 - u2^2 - u1 - u2",
    (1, 2): "4*u1*u2 - 3*u2^2 + 2*u1 - 4*u2 - 1",
    (2, 2): "-4*u1^2 + 12*u1*u2 - 7*u2^2 + 8*u1 - 10*u2 - 3",
}


def screened_pair():
    """A flat operator X with quadratic coefficients that is Hamiltonian but not compatible with P1.

    The remaining trio slots are the Kaup-Broer P1 and R, so replacing P2 by X
    breaks the pencil stage.
    """
    kb = kaup_broer()
    X = FirstOrderOperator(_metric(2, SCREENED_METRIC), name="X")
    return {"P1": kb["P1"], "X": X, "R": kb["R"]}


def b_array(n: int, entries: dict):
    b = [[[parse_expr("0")] * n for _ in range(n)] for _ in range(n)]
    for (k, j, l), e in entries.items():
        b[k - 1][j - 1][l - 1] = parse_expr(e)
    return b


FIXTURES = {
    "kaup-broer": kaup_broer,
    "akns": akns,
    "n2-family": n2_family,
    "n4-eta": n4_eta,
    "n4-p1": n4_p1,
    "n4-local": n4_local,
    "n4-nonlocal": n4_nonlocal,
    "n4-noncyclic": n4_noncyclic,
    "screened-pair": screened_pair,
}


@dataclass(frozen=True)
class FixtureInfo:
    name: str
    description: str


DESCRIPTIONS = {
    "kaup-broer": "Kaup-Broer trio: P1, P2 and R = [[0,-1],[1,0]] D^2",
    "akns": "AKNS trio: P1, Q1 and R, plus Q1_remark raised from the rank-2 conic",
    "n2-family": "general two-component operator compatible with [[0,1],[-1,0]] D^2",
    "n4-eta": "four-component second-order operator",
    "n4-p1": "constant antidiagonal P1 for the four-component subclass",
    "n4-local": "local four-component solution compatible with P1 and R",
    "n4-nonlocal": "non-local four-component solution",
    "n4-noncyclic": "Hamiltonian Monge-type operator violating only the cyclic condition for n4-eta",
    "screened-pair": "Kaup-Broer P1 and R with a Hamiltonian X that is not compatible with P1",
}


def load(name: str) -> dict:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(FIXTURES)}") from None
