import pytest

from nvaxial.params import default_config
from nvaxial.susceptibility import SusceptibilityInputs

# Filled by test_acceptance; echoed after the run so the per-criterion
# verdicts are visible even with output capture on.
ACCEPTANCE_LINES: dict[str, str] = {}


@pytest.fixture(scope="session")
def cfg():
    return default_config()


@pytest.fixture(scope="session")
def inputs0(cfg):
    return SusceptibilityInputs.from_config(cfg, 0.0)


@pytest.fixture(scope="session")
def reduced_q(cfg):
    return cfg.with_(Q=100.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k.rstrip("abcd")), k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
