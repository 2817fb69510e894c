"""Per-criterion PASS/FAIL summary for the acceptance suite."""

import pytest

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k, label): acceptance criterion k")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    k, label = marker.args
    passed, _ = _outcomes.get(k, (True, label))
    if report.failed or (report.when == "call" and report.skipped):
        passed = False
    _outcomes[k] = (passed, label)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_outcomes):
        passed, label = _outcomes[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if passed else 'FAIL'} - {label}")
