import contextlib

import pytest

_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record one acceptance line per criterion; failures re-raise."""

    @contextlib.contextmanager
    def record(number, label):
        detail = []
        try:
            yield detail
        except BaseException:
            _CRITERIA[number] = ("FAIL", label, "; ".join(detail))
            raise
        _CRITERIA[number] = ("PASS", label, "; ".join(detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, label, detail = _CRITERIA[number]
        line = f"criterion {number:2d}: {status}  {label}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
