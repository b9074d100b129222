import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record one acceptance criterion; prints a PASS/FAIL line and returns the flag."""

    def record(number, title, passed, detail=""):
        passed = bool(passed)
        _ACCEPTANCE.append((number, title, passed, detail))
        print(f"ACCEPTANCE [{'PASS' if passed else 'FAIL'}] {number} {title} {detail}".rstrip())
        return passed

    return record


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(
            f"ACCEPTANCE [{'PASS' if passed else 'FAIL'}] {number} {title} {detail}".rstrip()
        )
