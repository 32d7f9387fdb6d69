import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Print one PASS/FAIL line for an acceptance criterion and keep it for the summary."""

    def emit(label: str, name: str, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} [{label}] {name}: {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
