import numpy as np
import pytest

import quditdd as q

# filled by test_acceptance.py; printed after the run so the per-criterion
# verdicts survive output capture
ACCEPTANCE_LINES: list[str] = []

WORKING_LEVELS = ((2.0, 2.0), (2.0, 1.0), (1.0, 1.0))
FIELD_TESLA = 13.23e-3
ANCHOR_T2 = 1.04e-3


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def be_atom():
    return q.load_atom("be9+")


@pytest.fixture(scope="session")
def be_system(be_atom):
    return q.system_for(be_atom, WORKING_LEVELS, FIELD_TESLA)


@pytest.fixture(scope="session")
def calibrated_sigma(be_system):
    return q.auto_sigma(be_system, ANCHOR_T2)


@pytest.fixture(scope="session")
def lab_noise(calibrated_sigma):
    """Quasi-static field at the calibrated width plus the 150 Hz line."""
    return q.NoiseSpec(
        quasi_static=q.QuasiStaticComponent(calibrated_sigma),
        harmonics=(q.HarmonicComponent(150.0, 10e-9),),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
