import pytest

_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""

    def report(number: int, ok: bool, detail: str) -> None:
        ok = bool(ok) and _RESULTS.get(number, (True, ""))[0]
        prev = _RESULTS.get(number, (True, ""))[1]
        _RESULTS[number] = (ok, f"{prev}; {detail}" if prev else detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")

    return report


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        ok, detail = _RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
