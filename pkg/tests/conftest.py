import pytest

# one PASS/FAIL line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def full_report():
    from pubpriv.checks import verify_suite

    return verify_suite("full")


@pytest.fixture(scope="session")
def fast_report():
    from pubpriv.checks import verify_suite

    return verify_suite("fast")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
