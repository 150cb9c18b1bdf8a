import pytest

from guidebot.engine import default_assets, default_kb, default_lexicon
from guidebot.simulation import default_latency_model, default_scenario


@pytest.fixture(scope="session")
def kb():
    return default_kb()


@pytest.fixture(scope="session")
def lexicon():
    return default_lexicon()


@pytest.fixture(scope="session")
def assets():
    return default_assets()


@pytest.fixture(scope="session")
def scenario():
    return default_scenario()


@pytest.fixture(scope="session")
def latency_model():
    return default_latency_model()
