import json

import pytest

from hamtrio import fixtures
from hamtrio.cli import InputError, fixture_files, main, parse_operator_file
from hamtrio.hamops import SecondOrderConstantOperator

KB_P2 = """# Kaup-Broer, second operator
dim: 2
order: 1
vars: u1 u2
params:
metric:
  1 1: 2
  1 2: u1
  2 2: 2*u2
christoffel:
  1 2 1: 1
  2 2 2: 1
"""


def run(capsys, *argv):
    code = main(list(argv) + ["--no-timing"])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


@pytest.fixture
def fx(tmp_path, capsys):
    """Write a fixture's files and return {key: path}."""
    def write(name):
        code, rep = run(capsys, "fixture", name, "--out-dir", str(tmp_path))
        assert code == 0
        return {p.rsplit("/", 1)[1][len(name) + 1:-3]: p for p in rep["files"]}
    return write


def test_fixture_list(capsys):
    code, rep = run(capsys, "fixture", "--list")
    assert code == 0 and set(rep["fixtures"]) == set(fixtures.FIXTURES)


def test_kaup_broer_trio_from_files(fx, capsys):
    f = fx("kaup-broer")
    assert sorted(f) == ["P1", "P2", "R"]
    code, rep = run(capsys, "trio", f["P1"], f["P2"], f["R"])
    assert code == 0 and rep["ok"] and rep["schema"] == 1
    assert rep["command"]["name"] == "trio"


def test_akns_trio_from_files(fx, capsys):
    f = fx("akns")
    code, rep = run(capsys, "trio", f["P1"], f["Q1"], f["R"])
    assert code == 0


def test_screened_trio_fails_with_exit_1(fx, capsys):
    f = fx("screened-pair")
    code, rep = run(capsys, "trio", f["P1"], f["X"], f["R"])
    assert code == 1 and not rep["passed"]
    failed = [c["condition"] for c in rep["conditions"] if not c["passed"]]
    assert any(c.startswith("P.Q:") for c in failed)
    first = next(c for c in rep["conditions"] if not c["passed"])
    assert isinstance(first["residual"], str) and first["indices"]


def test_nonlocal_fixture_tail_entries(fx):
    text = open(fx("n4-nonlocal")["Q1"]).read()
    tail = text.split("tail:\n", 1)[1].split()
    assert tail == ["2", "1:", "w2_1", "4", "3:", "w2_1"]


def test_unknown_fixture_exit_2(capsys):
    assert main(["fixture", "no-such-thing"]) == 2
    assert "unknown fixture" in capsys.readouterr().err


def test_compat_first_second(fx, capsys):
    f = fx("kaup-broer")
    assert run(capsys, "compat", f["P1"], f["R"])[0] == 0
    g = fx("n4-eta")
    loc = fx("n4-local")
    assert run(capsys, "compat", loc["Q1"], g["R"])[0] == 0
    assert run(capsys, "compat", fx("n4-noncyclic")["Q1"], g["R"])[0] == 1


def test_compat_pencil(fx, capsys):
    code, rep = run(capsys, "compat", fx("n4-local")["Q1"], fx("n4-p1")["P1"])
    assert code == 0 and rep["ok"]


def test_verify(fx, capsys):
    code, rep = run(capsys, "verify", fx("kaup-broer")["P2"])
    assert code == 0 and [c["condition"] for c in rep["conditions"]] == [
        "gamma_symmetry", "metric_compatibility", "tail_symmetry", "tail_closure", "curvature_tail"]


def test_conic_ranks(fx, capsys):
    kb = fx("kaup-broer")
    assert run(capsys, "conic", kb["P1"])[1]["rank"] == 2
    assert run(capsys, "conic", kb["P2"])[1]["rank"] == 3
    ak = fx("akns")
    assert run(capsys, "conic", ak["Q1_remark"])[1]["rank"] == 2


def test_conic_rejects_n4(fx, capsys):
    assert main(["conic", fx("n4-local")["Q1"]]) == 2
    assert "n=2 only" in capsys.readouterr().err


def test_solve_n2(tmp_path, capsys):
    tree = tmp_path / "tree.txt"
    code, rep = run(capsys, "solve", "--n", "2", "--out", str(tree))
    assert code == 0
    assert rep["branches"]["total"] == 1 and rep["branches"]["verdicts"] == {"pass": 1}
    assert tree.read_text().startswith("# hamtrio branch tree v1")


def test_reports_are_deterministic(fx, capsys):
    f = fx("kaup-broer")
    a = run(capsys, "trio", f["P1"], f["P2"], f["R"])
    b = run(capsys, "trio", f["P1"], f["P2"], f["R"])
    assert json.dumps(a) == json.dumps(b)


@pytest.mark.parametrize("name", sorted(fixtures.FIXTURES))
def test_fixture_round_trip(name):
    built = fixtures.load(name)
    for fname, text in fixture_files(name).items():
        key = fname[len(name) + 1:-3]
        op = parse_operator_file(text, fname).operator(built[key].name)
        ref = built[key]
        if isinstance(ref, SecondOrderConstantOperator):
            assert op.eta == ref.eta
        else:
            assert op.g == ref.g and op.w == ref.w
            assert op.derived == ref.derived
            if not ref.derived:
                assert op.gamma == ref.gamma


# -- file validation ------------------------------------------------------------------

def test_parse_accepts_crlf_and_comments():
    of = parse_operator_file(KB_P2.replace("\n", "\r\n") + "# trailing comment\r\n")
    assert of.dim == 2 and not of.derive_christoffel
    assert str(of.metric[1, 2]) == "u1"


def test_omitted_christoffel_means_derived():
    of = parse_operator_file(KB_P2.split("christoffel:")[0])
    assert of.derive_christoffel


@pytest.mark.parametrize("bad", [
    KB_P2.replace("  1 2: u1", "  1 2: u1\n  2 1: u2"),  # asymmetric
    KB_P2.replace("dim: 2", "dim: 3"),  # vars do not match dim
    KB_P2.replace("2 2 2: 1", "2 2 3: 1"),  # index out of range
    KB_P2.replace("2*u2", "2*v"),  # undeclared name
    KB_P2.replace("order: 1", "order: 3"),
    KB_P2 + "tail:\n  1 1: u1\n",  # tail must be constant
    "dim: 2\norder: 2\nvars: u1 u2\neta:\n  1 2: 1\n  2 1: 1\n",  # not skew
])
def test_malformed_files_rejected(bad):
    with pytest.raises(InputError):
        parse_operator_file(bad)


def test_asymmetric_metric_file_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.op"
    p.write_text(KB_P2.replace("  1 2: u1", "  1 2: u1\n  2 1: u2"))
    assert main(["verify", str(p)]) == 2


def test_wrong_christoffel_rejected_unless_trusted(tmp_path, capsys):
    p = tmp_path / "gamma.op"
    p.write_text(KB_P2.replace("2 2 2: 1", "2 2 2: 2"))
    assert main(["verify", str(p), "--quiet"]) == 2
    assert main(["verify", str(p), "--quiet", "--trust-christoffel"]) == 1


def test_usage_errors_exit_2(capsys):
    assert main([]) == 2
    assert main(["solve"]) == 2
    assert main(["verify", "/nonexistent/file.op"]) == 2
