import pytest

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    n, title = marker
    entry = _CRITERIA.setdefault(n, {"title": title, "ok": True, "failed": []})
    if report.failed:
        entry["ok"] = False
        entry["failed"].append(report.nodeid.split("::")[-1])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        report.criterion = tuple(m.args)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        status = "PASS" if e["ok"] else "FAIL"
        line = f"criterion {n:2d} {status}  {e['title']}"
        if e["failed"]:
            line += f"  (failed: {', '.join(e['failed'])})"
        terminalreporter.write_line(line)
