import pytest

_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record the verdict for one acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> None:
        _RESULTS[number] = (ok, detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        ok, detail = _RESULTS[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {n}: {detail}")
