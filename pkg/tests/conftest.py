import pytest

from subconvex.qexp import expand_eta_quotient


@pytest.fixture(scope="session")
def eta8_small():
    return expand_eta_quotient("eta(8z)^3", 4000)


@pytest.fixture(scope="session")
def eta8_large():
    return expand_eta_quotient("eta(8z)^3", 200_000)


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
