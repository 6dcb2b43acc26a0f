import pytest

_CRITERIA: dict[int, dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "passed": True, "seen": False})
    if report.when == "call":
        entry["seen"] = True
    if report.failed or (report.when == "call" and report.skipped):
        entry["passed"] = False
    for key, value in item.user_properties:
        if key == "detail":
            entry["detail"] = value


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        ok = entry["passed"] and entry["seen"]
        line = f"criterion {number} [{entry['title']}]: {'PASS' if ok else 'FAIL'}"
        if entry.get("detail"):
            line += f" ({entry['detail']})"
        terminalreporter.write_line(line)
