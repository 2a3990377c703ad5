import pytest

from uavgame import presets


@pytest.fixture
def tiny2():
    return presets.tiny2()


@pytest.fixture
def coupled():
    return presets.tiny2_coupled()


_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record a one-line PASS/FAIL verdict, shown again in the terminal summary."""
    lines = request.config.stash.setdefault(_VERDICTS, [])

    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
        lines.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
