import pytest

from poissonnav.world import WorldConfig


@pytest.fixture
def empty_config():
    return WorldConfig(n_moving=0, n_static=0, seed=7)


_verdicts = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_verdicts] = []


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_verdicts, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def verdict(request):
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def record(number, title, ok, detail=""):
        line = f"criterion {number:>2}  {'PASS' if ok else 'FAIL'}  {title}  [{detail}]"
        request.config.stash[_verdicts].append(line)
        print(line)
        return ok

    return record
