"""Collects acceptance-criterion outcomes and prints one line per criterion."""
import pytest

_RESULTS: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.failed):
        return
    number, title = mark.args
    measured = "; ".join(str(v) for k, v in item.user_properties if k == "measured")
    ok = rep.passed and _RESULTS.get(number, (True,))[0]
    _RESULTS[number] = (ok, title, measured or ("error" if rep.failed else ""))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.write_sep("=", "acceptance criteria")
    for number in sorted(_RESULTS):
        ok, title, measured = _RESULTS[number]
        tr.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {measured}")
