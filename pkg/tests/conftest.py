import os

import pytest
from hypothesis import HealthCheck, settings

from hamtrio import fixtures
from hamtrio.diffgeo import SkewForm
from hamtrio.solver import assemble_system, build_ansatz, reduce_linear

settings.register_profile("default", max_examples=30, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=300, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def n2_pipeline():
    a = build_ansatz(2, SkewForm(fixtures.ETA_2_STANDARD))
    sys = assemble_system(a)
    return a, sys, reduce_linear(sys)


@pytest.fixture(scope="session")
def n4_pipeline():
    a = build_ansatz(4, SkewForm(fixtures.ETA_4))
    sys = assemble_system(a)
    return a, sys, reduce_linear(sys)


# -- acceptance summary: one PASS/FAIL line per criterion ------------------------------------

_criteria: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    num, text = mark.args
    ok = rep.passed and not hasattr(rep, "wasxfail")
    if rep.when == "setup" and rep.passed:
        return
    prev = _criteria.get(num, (True, text, []))
    notes = prev[2] + ([f"{item.name}: expected failure, {rep.wasxfail}"] if hasattr(rep, "wasxfail") else [])
    _criteria[num] = (prev[0] and ok, text, notes)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        ok, text, notes = _criteria[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {text}")
        for n in notes:
            terminalreporter.write_line(f"    {n}")
