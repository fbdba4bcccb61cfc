import re

_results = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    match = re.search(r"test_criterion_(\d+)_(\w+)", report.nodeid)
    if not match:
        return
    key = (int(match.group(1)), match.group(2))
    if report.when == "call" or report.outcome != "passed":
        detail = "; ".join(f"{k}={v}" for k, v in report.user_properties)
        prev = _results.get(key)
        if prev is None or prev[0] == "PASS":
            _results[key] = ("PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), (status, detail) in sorted(_results.items()):
        line = f"[{status}] criterion {num}: {name.replace('_', ' ')}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
