import re

_ACCEPTANCE = {}
_PATTERN = re.compile(r"test_acceptance\.py::test_ac(\d\d)_(\w+)")


def pytest_runtest_logreport(report):
    m = _PATTERN.search(report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2))
    failed = report.failed or (report.when == "call" and report.skipped)
    if failed:
        _ACCEPTANCE[key] = "FAIL"
    elif report.when == "call":
        _ACCEPTANCE.setdefault(key, "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), status in sorted(_ACCEPTANCE.items()):
        terminalreporter.write_line(f"AC{num:02d} {name:<36} {status}")
