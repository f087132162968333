"""Classify two-component first-order operators compatible with a constant second-order one.

Runs the full pipeline (ansatz, equations, linear reduction, case splitting)
and prints the single branch in the six-parameter form, with its quadric,
curvature and tail.

    python3 scripts/classify_n2.py
"""

from hamtrio.solver import classify_n2


def main():
    res = classify_n2(check=True)
    print(res.summary())
    print("parameters in terms of the ansatz unknowns:")
    for c, v in sorted(res.c_of_q.items()):
        print(f"  {c} = {v}")
    local = [[str(x) for x in r] for r in res.local_specialization]
    print(f"c0 = 0 gives the local affine row: {local}")
    print(f"elapsed {res.seconds:.2f} s")


if __name__ == "__main__":
    main()
