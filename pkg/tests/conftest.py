import numpy as np
import pytest

from agpolicy.crop_env import CropEnv, SimConfig
from agpolicy.harness import EnvFactory, season_weather


@pytest.fixture
def config():
    return SimConfig()


@pytest.fixture
def weather(config):
    return season_weather(11, config)


@pytest.fixture
def env(config, weather):
    return CropEnv(config, weather)


@pytest.fixture
def factory():
    return EnvFactory()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
