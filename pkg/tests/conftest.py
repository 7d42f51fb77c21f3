import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pogorelov_ma.harness import FIVE_DIRAC, TEN_DIRAC, THREE_DIRAC
from pogorelov_ma.transport import DiracMeasure

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def three_dirac():
    return DiracMeasure.normalized(*THREE_DIRAC)


@pytest.fixture
def five_dirac():
    return DiracMeasure.normalized(*FIVE_DIRAC)


@pytest.fixture
def ten_dirac():
    return DiracMeasure.normalized(*TEN_DIRAC)


@pytest.fixture
def two_dirac():
    return DiracMeasure([(-0.5, 0.0), (0.5, 0.0)], [np.pi / 2, np.pi / 2])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    from _checks import ACCEPTANCE
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[crit]
        status = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        terminalreporter.write_line(f"criterion {crit:>2}: {status}  " + "; ".join(d for _, d in parts))
