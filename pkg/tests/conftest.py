import pytest

CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion(capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def record(k: int, ok: bool, detail: str) -> bool:
        CRITERIA[k] = (bool(ok), detail)
        with capsys.disabled():
            print(f"\ncriterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        ok, detail = CRITERIA[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
