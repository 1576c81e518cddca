import pytest
from hypothesis import HealthCheck, settings

from vbpv import presets
from vbpv.module_model import bundled_modules, extract_single_diode

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def modules():
    return bundled_modules()


@pytest.fixture(scope="session")
def mono(modules):
    return modules["vikram_mono_375"]


@pytest.fixture(scope="session")
def poly(modules):
    return modules["vikram_poly_330"]


@pytest.fixture(scope="session")
def bifacial(modules):
    return modules["adani_bifacial_355"]


@pytest.fixture(scope="session")
def params(modules):
    return {k: extract_single_diode(v) for k, v in modules.items()}


@pytest.fixture(scope="session")
def raipur():
    return presets.location("raipur")


@pytest.fixture(scope="session")
def leh():
    return presets.location("leh")
