import numpy as np
import pytest

from citesim._backend import backends
from citesim.population import TeamGenParams, gen_team_sizes

BACKENDS = sorted(backends())


@pytest.fixture(scope="session")
def default_teams():
    return gen_team_sizes(TeamGenParams(), 6430, 7)


@pytest.fixture(scope="session")
def small_teams():
    return gen_team_sizes(TeamGenParams(), 500, 11)


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


_criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if report.when == "call" or report.failed or report.skipped:
        num, title = mark.args
        prev = _criteria.get(num, (title, "PASS"))[1]
        status = "PASS" if report.passed and prev == "PASS" else ("SKIP" if report.skipped else "FAIL")
        if prev == "FAIL":
            status = "FAIL"
        _criteria[num] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        title, status = _criteria[num]
        terminalreporter.write_line(f"criterion {num:2d} {status}: {title}")
