import os

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the test still asserts on its own."""

    def record(cid, passed, detail=""):
        _CRITERIA.append((cid, bool(passed), detail))
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid, passed, detail in sorted(_CRITERIA, key=lambda r: int(r[0][1:])):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} {cid}: {detail}")
