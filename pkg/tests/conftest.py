import mpmath
import pytest
from hypothesis import HealthCheck, settings

from repinsure.experiments import TABLE5_POLICY, table_market

settings.register_profile(
    "repo", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")

mpmath.mp.dps = 50


@pytest.fixture
def gains_params():
    """Table-4 market at r_h=100, P_ba=0.03 (u=1, fee 0.1)."""
    return table_market("table4", r_h=100, P_ba=0.03)


@pytest.fixture
def insured_setup():
    return table_market("table5", r_h=100), TABLE5_POLICY


ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
