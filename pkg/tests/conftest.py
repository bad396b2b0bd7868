from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
_VERDICTS = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def verdicts(request) -> list:
    """Collector for acceptance lines, echoed in the terminal summary."""
    return request.config.stash.setdefault(_VERDICTS, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=_criterion_order):
            terminalreporter.write_line(line)


def _criterion_order(line: str):
    tag = line.split("[", 1)[1].split("]", 1)[0]
    digits = "".join(c for c in tag if c.isdigit())
    return int(digits), tag
