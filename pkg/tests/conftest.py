from collections import defaultdict

import pytest

_outcomes = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion exercised by a test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    report = (yield).get_result()
    criteria = [m.args[0] for m in item.iter_markers("criterion")]
    # a setup error or a failed call both count against the criterion
    if report.when == "call" or report.failed:
        for n in criteria:
            _outcomes[n].append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        status = "PASS" if all(_outcomes[n]) else "FAIL"
        terminalreporter.write_line(f"acceptance criterion {n}: {status}")
