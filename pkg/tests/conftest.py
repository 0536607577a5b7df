import numpy as np
import pytest

from stochlab import jet, rotor


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def jp():
    return jet.JetParams()


@pytest.fixture
def rp():
    return rotor.RotorParams()


ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {n:2d}: {detail}")
