"""Randomized search for a Hamiltonian operator that is not compatible with a given one.

Candidates are flat by construction: a diagonal metric with one quadratic
function per coordinate, pushed through a unimodular linear change of
variables.  Each candidate is paired with the constant Kaup-Broer P1 and the
pencil is checked at five numeric values of lam.  The first hit is
cross-checked with the symbolic pencil check and printed as an operator file.

    python3 scripts/screen_pencils.py --seed 3 --tries 200
"""

import argparse
import random
from fractions import Fraction

from hamtrio.cli import format_operator_file
from hamtrio.diffgeo import Metric
from hamtrio.fixtures import kaup_broer
from hamtrio.hamops import FirstOrderOperator, hamiltonian_check, pencil, pencil_compat
from hamtrio.symcore import PENCIL_VAR, Polynomial

LAMBDAS = (Fraction(1), Fraction(-2), Fraction(1, 3), Fraction(5, 2), Fraction(-7, 4))


def random_unimodular(rng):
    while True:
        a, b, c, d = (rng.randint(-2, 2) for _ in range(4))
        if a * d - b * c in (1, -1):
            return [[a, b], [c, d]]


def candidate(rng) -> FirstOrderOperator:
    C = random_unimodular(rng)
    # v = C^{-1} u; with det = +-1 the inverse is integral
    det = C[0][0] * C[1][1] - C[0][1] * C[1][0]
    Ci = [[C[1][1] * det, -C[0][1] * det], [-C[1][0] * det, C[0][0] * det]]
    u = [Polynomial.var("u1"), Polynomial.var("u2")]
    v = [Polynomial.const(Ci[a][0]) * u[0] + Polynomial.const(Ci[a][1]) * u[1] for a in range(2)]
    h = []
    for a in range(2):
        p, q, r = rng.randint(-2, 2), rng.randint(-3, 3), rng.choice([-2, -1, 1, 2])
        h.append(Polynomial.const(p) * v[a] * v[a] + Polynomial.const(q) * v[a] + Polynomial.const(r))
    g = [[sum((Polynomial.const(C[i][a] * C[j][a]) * h[a] for a in range(2)), Polynomial.const(0))
          for j in range(2)] for i in range(2)]
    return FirstOrderOperator(Metric(g), name="X")


def incompatible_at_some_lambda(P, X) -> Fraction | None:
    pen = pencil(P, X)
    for lam in LAMBDAS:
        try:
            rep = hamiltonian_check(pen.subs({PENCIL_VAR: lam}))
        except ValueError:
            continue  # degenerate at this lam
        if not rep.passed:
            return lam
    return None


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--tries", type=int, default=200)
    args = ap.parse_args(argv)

    rng = random.Random(args.seed)
    P = kaup_broer()["P1"]
    for t in range(args.tries):
        X = candidate(rng)
        if all(x.degree() < 2 for r in X.g.entries for x in r):
            continue  # want genuinely quadratic coefficients
        try:
            if not hamiltonian_check(X).passed:
                continue
        except ValueError:
            continue
        lam = incompatible_at_some_lambda(P, X)
        if lam is None:
            continue
        sym = pencil_compat(P, X)
        print(f"try {t}: fails at lam = {lam}; symbolic pencil verdict: {'pass' if sym.passed else 'fail'}")
        print(format_operator_file(X, source=f"screen_pencils seed {args.seed} try {t}"))
        return 0 if not sym.passed else 1
    print("no incompatible candidate found")
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
