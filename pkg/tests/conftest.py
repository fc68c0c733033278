import pytest

from tumorhopf.model import dose_to_beta, hopf_preset, stable_preset
from tumorhopf.steady_state import newton_solve
from tumorhopf.system import build_ops

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def stable_params():
    return stable_preset()


@pytest.fixture(scope="session")
def hopf_params():
    return hopf_preset()


@pytest.fixture(scope="session")
def stable_ops(stable_params):
    return build_ops(stable_params, 199)


@pytest.fixture(scope="session")
def hopf_ops(hopf_params):
    return build_ops(hopf_params, 199)


@pytest.fixture(scope="session")
def stable_state(stable_ops):
    """Newton steady state of the stable preset at dose 0.5."""
    beta = dose_to_beta(0.5, stable_ops.params)
    return beta, newton_solve(beta, stable_ops)


@pytest.fixture(scope="session")
def hopf_state(hopf_ops):
    """Newton steady state of the Hopf preset at dose 0.4."""
    beta = dose_to_beta(0.4, hopf_ops.params)
    return beta, newton_solve(beta, hopf_ops)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
