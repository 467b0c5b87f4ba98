"""Shared fixtures: case-study network, reference weather, canned simulations."""

from datetime import datetime

import numpy as np
import pytest

from envsens.datasets import case_study, reference_weather
from envsens.network import build_thermal_network
from envsens.simulate import RunWindow, add_measurement_noise, simulate


@pytest.fixture(scope="session")
def case_network():
    return build_thermal_network(case_study())


@pytest.fixture(scope="session")
def base_weather():
    return reference_weather()


@pytest.fixture(scope="session")
def winter_run():
    return RunWindow(start=datetime(2008, 11, 15), end=datetime(2009, 2, 15))


@pytest.fixture(scope="session")
def clean_dataset(case_network, base_weather, winter_run):
    return simulate(case_network, base_weather, winter_run)


@pytest.fixture(scope="session")
def noisy_dataset(clean_dataset):
    return add_measurement_noise(clean_dataset, seed=2009)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(31415)
