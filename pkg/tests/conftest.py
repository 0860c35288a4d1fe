import pytest

ACCEPTANCE: list[str] = []


@pytest.fixture
def record():
    def rec(num, ok, text):
        ACCEPTANCE.append(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {text}")
        return ok
    return rec


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
