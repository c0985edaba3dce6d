import pytest

_RESULTS: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture
def record_criterion():
    """Store ``(number, title, passed, detail)`` for the end-of-run summary.

    Tests call this before asserting so failing criteria still get a line.
    """

    def record(number: int, title: str, passed: bool, detail: str = "") -> bool:
        _RESULTS[number] = (title, bool(passed), detail)
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, passed, detail = _RESULTS[number]
        verdict = "PASS" if passed else "FAIL"
        line = f"[{verdict}] criterion {number}: {title}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)
