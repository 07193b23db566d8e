import pytest
from hypothesis import HealthCheck, settings

from state_zoo import zoo

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def states():
    return zoo()
