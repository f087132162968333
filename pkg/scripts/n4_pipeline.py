"""Bounded run of the four-component pipeline.

Assembles the equations for the ansatz, reduces the linear part, splits the
nonlinear part within the given bounds, verifies every solved branch and
checks that the two published solutions satisfy the reduced system.

    python3 scripts/n4_pipeline.py --max-branches 60
    python3 scripts/n4_pipeline.py --max-branches 512 --out n4-tree.txt   # a few minutes
"""

import argparse
import time
from collections import Counter
from dataclasses import dataclass

from hamtrio import fixtures
from hamtrio.diffgeo import SkewForm
from hamtrio.solver import (
    SOLVED, ansatz_point, assemble_system, build_ansatz, case_split, check_sanity, dump_tree,
    point_residuals, reduce_linear, residuals_against, verify_branch,
)


@dataclass
class RunConfig:
    max_depth: int = 12
    max_branches: int = 60
    time_budget: float | None = None
    out: str | None = None


def run(cfg: RunConfig):
    t0 = time.monotonic()
    a = build_ansatz(4, SkewForm(fixtures.ETA_4))
    sys = assemble_system(a)
    print(f"unknowns {a.counts}; equations: {len(sys.linear)} linear, {len(sys.nonlinear)} nonlinear "
          f"({time.monotonic() - t0:.1f} s)")
    left = check_sanity(a, sys, strict=False)
    for k, v in left.items():
        print(f"  {k}: {len(v)} leftover equations" + (f", first {v[0].poly} from {v[0].provenance}" if v else ""))
    red = reduce_linear(sys)
    print(f"linear reduction: rank {red.rank}, {len(red.free)} free, {len(red.system.nonlinear)} nonlinear left")
    for make in (fixtures.n4_local, fixtures.n4_nonlocal):
        pt = ansatz_point(a, make()["Q1"])
        print(f"  {make.__name__}: {len(point_residuals(pt, red))} residuals in the reduced system")
    res = case_split(red.system, cfg.max_depth, cfg.max_branches, red.substitution, cfg.time_budget)
    print(f"split: {len(res)} branches {dict(Counter(b.status for b in res))}, {res.nodes} nodes, "
          f"{res.elapsed:.1f} s, incomplete={res.incomplete}")
    bad = 0
    verdicts = Counter()
    for b in res:
        if b.status == SOLVED:
            bad += bool(residuals_against(b, sys.all_equations()))
            verify_branch(b, a)
            verdicts[b.verdict] += 1
    print(f"solved branches: {bad} with nonzero residuals, verdicts {dict(verdicts)}")
    if cfg.out:
        dump_tree(res, a.unknowns, cfg.out)
        print(f"tree written to {cfg.out}")
    return res


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-depth", type=int, default=12)
    ap.add_argument("--max-branches", type=int, default=60)
    ap.add_argument("--time-budget", type=float)
    ap.add_argument("--out")
    ns = ap.parse_args(argv)
    run(RunConfig(ns.max_depth, ns.max_branches, ns.time_budget, ns.out))


if __name__ == "__main__":
    main()
