"""Command-line front end.

Operator files are line oriented::

    # Kaup-Broer, second operator
    dim: 2
    order: 1
    vars: u1 u2
    params:
    source: Kaup-Broer trio
    metric:
      1 1: 2
      1 2: u1
      2 2: 2*u2
    christoffel:
      1 2 1: 1
      2 2 2: 1

``order: 2`` files carry an ``eta:`` section instead of ``metric:``. Indices are
1-based, omitted entries are zero, the metric may be given by its upper
triangle and ``eta`` by entries above the diagonal. Omitting ``christoffel:``
means the symbols are derived from the metric.

Exit codes: 0 all checks pass, 1 a mathematical check failed, 2 input or
usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field

from hamtrio import __version__, fixtures, hamops
from hamtrio.diffgeo import Christoffel, DimensionError, Metric, SkewForm, lower_with_eta
from hamtrio.hamops import FirstOrderOperator, SecondOrderConstantOperator
from hamtrio.symcore.linalg import DegenerateMatrixError
from hamtrio.symcore.parse import ParseError, parse_expr
from hamtrio.symcore.poly import Polynomial, var_key
from hamtrio.symcore.vars import VarTable, field_var_names

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
SECTIONS = ("metric", "christoffel", "tail", "eta")
HEADER_KEYS = ("dim", "order", "vars", "params", "source")


class InputError(ValueError):
    """Malformed operator file or bad command-line usage (exit code 2)."""


# -- operator files --------------------------------------------------------------

@dataclass
class OperatorFile:
    dim: int
    order: int
    vars: tuple = ()
    params: tuple = ()
    source: str = ""
    metric: dict = field(default_factory=dict)  # (i, j) 1-based -> Polynomial
    christoffel: dict | None = None  # (i, j, k) -> Polynomial, None = derive from g
    tail: dict = field(default_factory=dict)
    eta: dict = field(default_factory=dict)

    @property
    def derive_christoffel(self) -> bool:
        return self.christoffel is None

    def operator(self, name: str = ""):
        n = self.dim
        if self.order == 2:
            rows = [[0] * n for _ in range(n)]
            for (i, j), v in self.eta.items():
                rows[i - 1][j - 1] = v.constant_value
            return SecondOrderConstantOperator(SkewForm(rows), name)
        zero = Polynomial.const(0)
        g = [[zero] * n for _ in range(n)]
        for (i, j), v in self.metric.items():
            g[i - 1][j - 1] = v
        gamma = None
        if self.christoffel is not None:
            gamma = Christoffel.from_entries(n, {(i - 1, j - 1, k - 1): v for (i, j, k), v in self.christoffel.items()})
        w = [[zero] * n for _ in range(n)]
        for (i, j), v in self.tail.items():
            w[i - 1][j - 1] = v
        return FirstOrderOperator(Metric(g), gamma, w, name)


def _indices(text: str, count: int, dim: int, lineno: int) -> tuple:
    parts = text.split()
    if len(parts) != count:
        raise InputError(f"line {lineno}: expected {count} indices, got {text!r}")
    try:
        idx = tuple(int(p) for p in parts)
    except ValueError:
        raise InputError(f"line {lineno}: indices must be integers, got {text!r}") from None
    if any(not 1 <= i <= dim for i in idx):
        raise InputError(f"line {lineno}: index out of range 1..{dim} in {text!r}")
    return idx


def parse_operator_file(text: str, where: str = "<input>") -> OperatorFile:
    """Parse and validate an operator file (UTF-8 text, LF or CRLF, ``#`` comments)."""
    header: dict = {}
    sections: dict = {}
    current = None
    for lineno, raw in enumerate(text.replace("\r\n", "\n").split("\n"), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition(":")
        key, val = key.strip(), val.strip()
        if not sep:
            raise InputError(f"{where}:{lineno}: expected 'key: value', got {raw.strip()!r}")
        if key in SECTIONS and not val:
            if key in sections:
                raise InputError(f"{where}:{lineno}: section {key!r} given twice")
            current = key
            sections[key] = []
        elif key in HEADER_KEYS and current is None:
            header[key] = val
        elif current is not None and key and key[0].isdigit():
            sections[current].append((lineno, key, val))
        else:
            raise InputError(f"{where}:{lineno}: unexpected {key!r}")
    for k in ("dim", "order"):
        if k not in header:
            raise InputError(f"{where}: missing '{k}:'")
    try:
        dim, order = int(header["dim"]), int(header["order"])
    except ValueError:
        raise InputError(f"{where}: dim and order must be integers") from None
    if dim < 1 or order not in (1, 2):
        raise InputError(f"{where}: need dim >= 1 and order 1 or 2")
    fv = tuple(header.get("vars", "").split()) or field_var_names(dim)
    if fv != field_var_names(dim):
        raise InputError(f"{where}: vars must be {' '.join(field_var_names(dim))}")
    params = tuple(header.get("params", "").split())
    try:
        table = VarTable(fv, params)
    except ValueError as exc:
        raise InputError(f"{where}: {exc}") from None
    out = OperatorFile(dim, order, fv, params, header.get("source", ""))

    def expr(lineno, s):
        if not s:
            raise InputError(f"{where}:{lineno}: empty expression")
        try:
            v = parse_expr(s, table)
        except ParseError as exc:
            raise InputError(f"{where}:{lineno}: {exc}") from None
        if not isinstance(v, Polynomial):
            raise InputError(f"{where}:{lineno}: entries must be polynomial, got {s!r}")
        return v

    if order == 1:
        if "eta" in sections:
            raise InputError(f"{where}: 'eta:' belongs to order-2 files")
        if "metric" not in sections:
            raise InputError(f"{where}: order-1 file without 'metric:'")
        for lineno, k, v in sections["metric"]:
            i, j = _indices(k, 2, dim, lineno)
            val = expr(lineno, v)
            for a, b in ((i, j), (j, i)):
                if (a, b) in out.metric and out.metric[(a, b)] != val:
                    raise InputError(f"{where}:{lineno}: metric is not symmetric at ({i}, {j})")
            out.metric[(i, j)] = out.metric[(j, i)] = val
        if "christoffel" in sections:
            out.christoffel = {}
            for lineno, k, v in sections["christoffel"]:
                out.christoffel[_indices(k, 3, dim, lineno)] = expr(lineno, v)
        for lineno, k, v in sections.get("tail", []):
            val = expr(lineno, v)
            if any(var_key(x)[0] == 0 for x in val.variables()):
                raise InputError(f"{where}:{lineno}: tail entries must be constant in the field variables")
            out.tail[_indices(k, 2, dim, lineno)] = val
    else:
        for s in ("metric", "christoffel", "tail"):
            if s in sections:
                raise InputError(f"{where}: '{s}:' belongs to order-1 files")
        if "eta" not in sections:
            raise InputError(f"{where}: order-2 file without 'eta:'")
        for lineno, k, v in sections["eta"]:
            i, j = _indices(k, 2, dim, lineno)
            val = expr(lineno, v)
            if not val.is_constant:
                raise InputError(f"{where}:{lineno}: eta entries must be constants")
            if i == j and not val.is_zero:
                raise InputError(f"{where}:{lineno}: eta is not skew (nonzero diagonal)")
            if (j, i) in out.eta and out.eta[(j, i)] != val.scale(-1):
                raise InputError(f"{where}:{lineno}: eta is not skew at ({i}, {j})")
            if (i, j) in out.eta and out.eta[(i, j)] != val:
                raise InputError(f"{where}:{lineno}: conflicting entries at ({i}, {j})")
            out.eta[(i, j)], out.eta[(j, i)] = val, val.scale(-1)
        if dim % 2:
            raise InputError(f"{where}: a non-degenerate skew form needs even dim")
    return out


def load_operator(path: str, trust_christoffel: bool = False):
    """Read a file and build the operator; given Christoffel symbols are checked against g."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    of = parse_operator_file(text, path)
    try:
        op = of.operator(os.path.basename(path))
    except (ValueError, DegenerateMatrixError) as exc:
        raise InputError(f"{path}: {exc}") from None
    if of.order == 1 and of.christoffel is not None and not trust_christoffel:
        # symmetric in the lowered sense and metric-compatible: the Levi-Civita symbols when g is non-degenerate
        for name, gen in (("gamma_symmetry", hamops.gamma_symmetry_residuals),
                          ("metric_compatibility", hamops.metric_compatibility_residuals)):
            bad = next(((idx, r) for idx, r in gen(op.g, op.gamma) if not r.is_zero), None)
            if bad:
                idx = tuple(i + 1 for i in bad[0])
                raise InputError(f"{path}: Christoffel symbols are not those of the metric ({name} at {idx}); "
                                 "use --trust-christoffel to keep them")
    return of, op


def _fmt(x) -> str:
    return str(x)


def format_operator_file(op, source: str = "", params=None) -> str:
    """Serialize an operator (first order or eta D^2) in the file format."""
    n = op.n
    if isinstance(op, SecondOrderConstantOperator):
        lines = [f"# {op.name}" if op.name else "# second-order operator", f"dim: {n}", "order: 2",
                 "vars: " + " ".join(field_var_names(n)), "params:", f"source: {source}".rstrip(), "eta:"]
        for i in range(n):
            for j in range(i + 1, n):
                v = op.eta.eta[i][j]
                if v:
                    lines.append(f"  {i + 1} {j + 1}: {Polynomial.const(v)}")
        return "\n".join(lines) + "\n"
    fv = set(field_var_names(n))
    if params is None:
        params = sorted((v for v in op.variables() if v not in fv), key=var_key)
    lines = [f"# {op.name}" if op.name else "# first-order operator", f"dim: {n}", "order: 1",
             "vars: " + " ".join(field_var_names(n)), ("params: " + " ".join(params)).rstrip(), f"source: {source}".rstrip(), "metric:"]
    for i in range(n):
        for j in range(i, n):
            if not op.g[i, j].is_zero:
                lines.append(f"  {i + 1} {j + 1}: {_fmt(op.g[i, j])}")
    if not op.derived:
        lines.append("christoffel:")
        for (i, j, k), v in sorted(op.gamma.nonzero().items()):
            lines.append(f"  {i + 1} {j + 1} {k + 1}: {_fmt(v)}")
    tail = [(i, j) for i in range(n) for j in range(n) if not op.w[i][j].is_zero]
    if tail:
        lines.append("tail:")
        lines.extend(f"  {i + 1} {j + 1}: {_fmt(op.w[i][j])}" for i, j in tail)
    return "\n".join(lines) + "\n"


# -- reports -------------------------------------------------------------------------

def make_report(command: str, args: dict, ok: bool, body: dict, started: float, timing: bool = True) -> dict:
    rep = {"schema": SCHEMA, "tool": "hamtrio", "version": __version__,
           "command": {"name": command, "args": args}, "ok": ok}
    rep.update(body)
    if timing:
        rep["timing"] = {"seconds": round(time.monotonic() - started, 3)}
    return rep


def emit(report: dict, path: str | None, quiet: bool = False) -> None:
    text = json.dumps(report, indent=2, sort_keys=False)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    if not quiet:
        print(text)


def _degenerate_report(exc: DegenerateMatrixError) -> dict:
    return {"passed": False, "flags": [],
            "conditions": [{"condition": "nondegenerate", "passed": False, "residual": str(exc.det),
                            "detail": str(exc)}]}


# -- commands ---------------------------------------------------------------------

def cmd_verify(ns) -> tuple[int, dict]:
    t0 = time.monotonic()
    of, op = load_operator(ns.file, ns.trust_christoffel)
    if of.order != 1:
        raise InputError("verify expects a first-order operator file")
    try:
        body = hamops.hamiltonian_check(op).as_dict()
    except DegenerateMatrixError as exc:
        body = _degenerate_report(exc)
    ok = body["passed"]
    return (EXIT_OK if ok else EXIT_FAIL), make_report("verify", {"file": ns.file}, ok, body, t0, not ns.no_timing)


def cmd_compat(ns) -> tuple[int, dict]:
    t0 = time.monotonic()
    fa, A = load_operator(ns.file_a, ns.trust_christoffel)
    fb, B = load_operator(ns.file_b, ns.trust_christoffel)
    if A.n != B.n:
        raise InputError(f"operators have n={A.n} and n={B.n}")
    orders = (fa.order, fb.order)
    try:
        if orders == (1, 2):
            rep, mode = hamops.compat_with_R2(A, B), "first-second"
        elif orders == (2, 1):
            rep, mode = hamops.compat_with_R2(B, A), "first-second"
        elif orders == (1, 1):
            rep, mode = hamops.pencil_compat(A, B), "pencil"
        else:
            raise InputError("two constant second-order operators: nothing to check")
        body = rep.as_dict()
    except DegenerateMatrixError as exc:
        body, mode = _degenerate_report(exc), "pencil" if orders == (1, 1) else "first-second"
    body["mode"] = mode
    ok = body["passed"] and not body["flags"]
    return (EXIT_OK if ok else EXIT_FAIL), make_report(
        "compat", {"a": ns.file_a, "b": ns.file_b}, ok, body, t0, not ns.no_timing)


def cmd_trio(ns) -> tuple[int, dict]:
    t0 = time.monotonic()
    fp, P = load_operator(ns.p, ns.trust_christoffel)
    fq, Q = load_operator(ns.q, ns.trust_christoffel)
    fr, R = load_operator(ns.r)
    if (fp.order, fq.order, fr.order) != (1, 1, 2):
        raise InputError("trio expects two first-order files and one second-order file")
    try:
        body = hamops.trio_verify(P, Q, R).as_dict()
    except DegenerateMatrixError as exc:
        body = _degenerate_report(exc)
    except DimensionError as exc:
        raise InputError(str(exc)) from None
    ok = body["passed"] and not body["flags"]
    return (EXIT_OK if ok else EXIT_FAIL), make_report(
        "trio", {"p": ns.p, "q": ns.q, "r": ns.r}, ok, body, t0, not ns.no_timing)


def cmd_conic(ns) -> tuple[int, dict]:
    from hamtrio.projgeo import Q_from_monge, conic_rank
    t0 = time.monotonic()
    of, op = load_operator(ns.file, ns.trust_christoffel)
    if of.order != 1:
        raise InputError("conic expects a first-order operator file")
    if of.dim != 2:
        raise InputError("conic extraction is n=2 only")
    if ns.eta:
        fe, R = load_operator(ns.eta)
        if fe.order != 2 or fe.dim != 2:
            raise InputError("--eta must be a two-component second-order file")
        eta = R.eta
    else:
        eta = SkewForm(fixtures.ETA_2)
    gbar = lower_with_eta(op.g, eta)
    try:
        Q = Q_from_monge(gbar)
    except ValueError as exc:
        body = {"passed": False, "conditions": [{"condition": "monge", "passed": False, "detail": str(exc)}]}
        return EXIT_FAIL, make_report("conic", {"file": ns.file}, False, body, t0, not ns.no_timing)
    body = {"passed": True, "rank": conic_rank(Q),
            "Q": [[str(x) for x in r] for r in Q.Q],
            "covariant_metric": [[str(gbar[i, j]) for j in range(2)] for i in range(2)]}
    return EXIT_OK, make_report("conic", {"file": ns.file}, True, body, t0, not ns.no_timing)


def cmd_solve(ns) -> tuple[int, dict]:
    from hamtrio import solver
    t0 = time.monotonic()
    n = ns.n
    if n < 2 or n % 2:
        raise InputError("--n must be even and at least 2")
    if ns.eta:
        fe, R = load_operator(ns.eta)
        if fe.order != 2 or fe.dim != n:
            raise InputError(f"--eta must be a second-order file with dim {n}")
        eta = R.eta
    else:
        eta = SkewForm(fixtures.ETA_2_STANDARD) if n == 2 else SkewForm.standard(n)
    max_depth = ns.max_depth if ns.max_depth is not None else 12
    max_branches = ns.max_branches if ns.max_branches is not None else 512
    a = solver.build_ansatz(n, eta)
    sys_ = solver.assemble_system(a)
    sanity = solver.check_sanity(a, sys_, strict=False)
    red = solver.reduce_linear(sys_)
    t_assembled = time.monotonic() - t0
    res = solver.case_split(red.system, max_depth, max_branches, red.substitution, ns.time_budget)
    solved = [b for b in res.branches if b.status == solver.SOLVED]
    if not ns.no_verify:
        solver.verify_branches(solved, a)
    failed = [i for i, b in enumerate(res.branches, 1) if b.verdict == "fail"]
    if ns.out:
        solver.dump_tree(res, a.unknowns, ns.out)
    counts: dict = {}
    for b in res.branches:
        counts[b.status] = counts.get(b.status, 0) + 1
    verdicts: dict = {}
    for b in solved:
        verdicts[b.verdict or "unverified"] = verdicts.get(b.verdict or "unverified", 0) + 1
    body = {
        "passed": not failed,
        "unknowns": a.counts,
        "equations": {"linear": len(sys_.linear), "nonlinear": len(sys_.nonlinear)},
        "reduced": {"rank": red.rank, "free": len(red.free), "nonlinear": len(red.system.nonlinear),
                    "consistent": red.consistent},
        "sanity": {k: [str(e.poly) for e in v] for k, v in sanity.items()},
        "branches": {"total": len(res.branches), "by_status": counts, "verdicts": verdicts,
                     "incomplete": res.incomplete, "nodes": res.nodes, "deduplicated": res.dropped,
                     "failed": failed},
        "bounds": {"max_depth": max_depth, "max_branches": max_branches, "time_budget": ns.time_budget},
        "tree": ns.out,
    }
    if not ns.no_timing:
        body["stages"] = {"assemble_and_reduce": round(t_assembled, 3)}
    return (EXIT_OK if not failed else EXIT_FAIL), make_report(
        "solve", {"n": n, "eta": ns.eta, "max_depth": max_depth, "max_branches": max_branches}, not failed, body,
        t0, not ns.no_timing)


FIXTURE_SOURCES = {
    "kaup-broer": "Kaup-Broer trio",
    "akns": "AKNS trio",
    "n2-family": "two-component classification family",
    "n4-eta": "four-component second-order operator",
    "n4-p1": "four-component constant P1",
    "n4-local": "four-component local solution",
    "n4-nonlocal": "four-component non-local solution",
    "n4-noncyclic": "four-component operator failing only the cyclic condition",
    "screened-pair": "flat quadratic operator not compatible with the Kaup-Broer P1",
}


def fixture_files(name: str) -> dict:
    """File name -> contents for a built-in fixture."""
    ops = fixtures.load(name)
    out = {}
    for key, op in ops.items():
        out[f"{name}-{key}.op"] = format_operator_file(op, FIXTURE_SOURCES.get(name, name))
    return out


def cmd_fixture(ns) -> tuple[int, dict]:
    t0 = time.monotonic()
    if ns.list:
        body = {"passed": True, "fixtures": dict(fixtures.DESCRIPTIONS)}
        return EXIT_OK, make_report("fixture", {"list": True}, True, body, t0, not ns.no_timing)
    if not ns.name:
        raise InputError("fixture needs a name (or --list)")
    try:
        files = fixture_files(ns.name)
    except KeyError as exc:
        raise InputError(exc.args[0]) from None
    os.makedirs(ns.out_dir, exist_ok=True)
    written = []
    for fname, text in files.items():
        path = os.path.join(ns.out_dir, fname)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        written.append(path)
    body = {"passed": True, "files": written}
    return EXIT_OK, make_report("fixture", {"name": ns.name, "out_dir": ns.out_dir}, True, body, t0, not ns.no_timing)


# -- argument parsing ---------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hamtrio", description="Check and construct compatible trios of Hamiltonian operators.")
    p.add_argument("--version", action="version", version=f"hamtrio {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--report", help="also write the JSON report to this file")
    common.add_argument("--quiet", action="store_true", help="do not print the report")
    common.add_argument("--no-timing", action="store_true", help="omit timings, for byte-identical reports")
    common.add_argument("--trust-christoffel", action="store_true",
                        help="accept given Christoffel symbols without checking them against the metric")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    s = sub.add_parser("verify", parents=[common], help="Hamiltonianity of a first-order operator")
    s.add_argument("file")
    s.set_defaults(func=cmd_verify)
    s = sub.add_parser("compat", parents=[common], help="compatibility of two operators")
    s.add_argument("file_a")
    s.add_argument("file_b")
    s.set_defaults(func=cmd_compat)
    s = sub.add_parser("trio", parents=[common], help="full check of P, Q and eta D^2")
    s.add_argument("p")
    s.add_argument("q")
    s.add_argument("r")
    s.set_defaults(func=cmd_trio)
    s = sub.add_parser("conic", parents=[common], help="quadric and rank behind a two-component metric")
    s.add_argument("file")
    s.add_argument("--eta", help="second-order file used for lowering (default [[0,-1],[1,0]])")
    s.set_defaults(func=cmd_conic)
    s = sub.add_parser("solve", parents=[common], help="run the classification pipeline")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--eta", help="second-order file (default: standard form)")
    s.add_argument("--max-depth", type=int)
    s.add_argument("--max-branches", type=int)
    s.add_argument("--time-budget", type=float, help="seconds of splitting before stopping")
    s.add_argument("--no-verify", action="store_true", help="skip verification of solved branches")
    s.add_argument("--out", help="write the branch tree here")
    s.set_defaults(func=cmd_solve)
    s = sub.add_parser("fixture", parents=[common], help="write the operator files of a built-in fixture")
    s.add_argument("name", nargs="?")
    s.add_argument("--out-dir", default=".")
    s.add_argument("--list", action="store_true")
    s.set_defaults(func=cmd_fixture)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if not getattr(ns, "command", None):
            raise InputError("missing command; see hamtrio --help")
        code, report = ns.func(ns)
    except InputError as exc:
        print(f"hamtrio: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    emit(report, ns.report, ns.quiet)
    return code


if __name__ == "__main__":
    sys.exit(main())
