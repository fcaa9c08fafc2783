import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_verdicts: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    failed = report.failed or (report.when == "call" and report.skipped)
    if report.when == "call" or failed:
        previous = _verdicts.get(number, (None, title))[0]
        _verdicts[number] = ("FAIL" if failed or previous == "FAIL" else "PASS", title)


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_verdicts):
        verdict, title = _verdicts[number]
        terminalreporter.write_line(f"[{verdict}] criterion {number:2d}: {title}")
    passed = sum(v == "PASS" for v, _ in _verdicts.values())
    terminalreporter.write_line(f"{passed}/{len(_verdicts)} criteria pass")
