import pytest

# filled by tests/test_acceptance.py: criterion number -> summary line
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def record_criterion():
    def record(number: int, passed: bool, detail: str, elapsed: float, limit: float):
        ok = passed and elapsed < limit
        line = (f"criterion {number:2d}: {'PASS' if ok else 'FAIL'} | {detail} | "
                f"{elapsed:.1f} s (limit {limit:g} s)")
        ACCEPTANCE_LINES[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
