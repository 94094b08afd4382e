import pytest
from hypothesis import HealthCheck, settings

from bec_optomech import gpe
from bec_optomech.units import SystemParams, default_scan

settings.register_profile(
    "default", deadline=None, max_examples=30,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def params():
    return SystemParams()


@pytest.fixture(scope="session")
def gpe_params():
    return SystemParams().with_photons(3.6)


@pytest.fixture(scope="session")
def gpe_ground(gpe_params):
    scan = default_scan(gpe_params, duration=5.0e-3)
    return gpe.ground_state(gpe_params, delta_c=scan.delta_c_start)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
