import pytest
from hypothesis import settings

from patternfront.model import ModelParams

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def fig4():
    """c0 = 7, alpha0 = 3 (Delta = 1) at eps = 0.01."""
    return ModelParams(alpha0=3.0, c0=7.0, gamma=0.0, eps=0.01)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion; lines are echoed in the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number: int, ok: bool, detail: str, elapsed: float, budget: float) -> bool:
        ok = bool(ok) and elapsed < budget
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail} [{elapsed:.2f} s < {budget:g} s]"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
