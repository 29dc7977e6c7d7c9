import pytest

RFC_KEY = b"12345678901234567890"

# filled by test_acceptance.py; echoed in the terminal summary
CRITERIA: dict[int, str] = {}


@pytest.fixture
def rfc_key() -> bytes:
    return RFC_KEY


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[n])
