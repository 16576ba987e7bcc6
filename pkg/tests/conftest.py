import time

import pytest

_ACCEPTANCE = []


class Criterion:
    def __init__(self, number, title, budget):
        self.number, self.title, self.budget = number, title, budget
        self.detail = ""
        self.passed = False
        self.elapsed = 0.0

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        extra = "; " + self.detail if self.detail else ""
        return "[%s] criterion %d: %s (%.2fs, budget %gs%s)" % (
            tag, self.number, self.title, self.elapsed, self.budget, extra)


@pytest.fixture
def criterion(request):
    """Times the test body, checks the budget and records a one-line verdict."""
    marker = request.node.get_closest_marker("criterion")
    number, title, budget = marker.args
    c = Criterion(number, title, budget)
    start = time.perf_counter()
    yield c
    c.elapsed = time.perf_counter() - start
    assert c.elapsed < budget, "took %.2fs, budget %gs" % (c.elapsed, budget)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    c = item.funcargs.get("criterion") if hasattr(item, "funcargs") else None
    if not isinstance(c, Criterion):
        return
    if rep.when == "call":
        c.passed = rep.passed
    elif rep.when == "teardown":
        c.passed = c.passed and rep.passed
        _ACCEPTANCE.append(c)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title, budget): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(_ACCEPTANCE, key=lambda c: c.number):
        terminalreporter.write_line(c.line())
