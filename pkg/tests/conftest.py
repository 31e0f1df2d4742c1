import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("gekrig", deadline=None, max_examples=50, print_blob=True)
settings.load_profile("gekrig")


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)


_verdicts: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line; all lines are repeated in the terminal summary."""
    def record(label: str, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        _verdicts.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _verdicts:
        terminalreporter.section("acceptance criteria")
        for line in _verdicts:
            terminalreporter.write_line(line)
