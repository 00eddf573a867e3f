import os

import pytest
from hypothesis import settings

settings.register_profile("ci", deadline=None, print_blob=True)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    number, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    _ACCEPTANCE[number] = (title, rep.outcome, detail, rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, outcome, detail, seconds = _ACCEPTANCE[number]
        status = "PASS" if outcome == "passed" else "FAIL"
        line = f"[{status}] {number:2d}. {title} ({seconds:.1f} s)"
        if detail:
            line += f": {detail}"
        tr.write_line(line)
