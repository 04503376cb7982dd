import numpy as np
import pytest

from triquad.quadsys import band_system, four_lines_system, random_system


@pytest.fixture(scope="session")
def sys_a():
    return band_system(10)


@pytest.fixture(scope="session")
def sys_b():
    return four_lines_system()


@pytest.fixture(scope="session")
def small4():
    return random_system(4, 1, "dense")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance criteria: one pass/fail line each at the end of the run
_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not rep.failed and not rep.skipped):
        return
    n, title = mark.args
    prev = _CRITERIA.get(n, (title, "PASS"))[1]
    status = "FAIL" if rep.failed else ("SKIP" if rep.skipped else "PASS")
    if prev != "PASS":
        status = prev
    _CRITERIA[n] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, status = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d} {status}  {title}")
