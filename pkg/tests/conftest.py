import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    from test_acceptance import CRITERIA
    name = report.nodeid.split("::")[-1].split("[")[0]
    if name not in CRITERIA:
        return
    ok = report.passed if report.when == "call" else not report.failed
    prev = _ACCEPTANCE.get(name, True)
    _ACCEPTANCE[name] = prev and ok


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    from test_acceptance import CRITERIA
    terminalreporter.section("acceptance criteria")
    for name, (num, label) in sorted(CRITERIA.items(), key=lambda t: t[1][0]):
        if name in _ACCEPTANCE:
            mark = "PASS" if _ACCEPTANCE[name] else "FAIL"
            terminalreporter.write_line(f"criterion {num}: {mark}  {label}")
