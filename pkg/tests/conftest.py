"""Collects acceptance outcomes and prints one PASS/FAIL line per criterion."""

import pytest

_OUTCOMES: dict[str, list[tuple[bool, str]]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        if report.failed and not detail:
            detail = report.longreprtext.strip().splitlines()[-1] if report.longreprtext else "error"
        _OUTCOMES.setdefault(marker.args[0], []).append((report.passed, f"{item.name}: {detail}"))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for name, results in _OUTCOMES.items():
        ok = all(passed for passed, _ in results)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}")
        for passed, detail in results:
            terminalreporter.write_line(f"        [{'ok' if passed else 'x '}] {detail}")
