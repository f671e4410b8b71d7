import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

_ACCEPTANCE: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and report.when == "call":
        _ACCEPTANCE[report.nodeid.split("::")[-1]] = "PASS" if report.passed else "FAIL"
    elif "test_acceptance.py" in report.nodeid and report.when == "setup" and report.failed:
        _ACCEPTANCE[report.nodeid.split("::")[-1]] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda n: int(n.split("_")[2]) if n.split("_")[2].isdigit() else 99):
        terminalreporter.write_line(f"{_ACCEPTANCE[name]}  {name}")
