import math

import numpy as np
import pytest

from cebeam.model import Scenario

TABLE_CLUTTER_DEG = [-15.3, 22.0, 59.9, -47.6, -75.4, 78.9, -11.4, 61.9, 34.1, -64.7]


@pytest.fixture(scope="session")
def flagship_scenario():
    """Full-scale configuration: 128 antennas, 10 strong clutter scatterers."""
    return Scenario(
        n_tx=128, n_rx=128, n_rf=8, code_len=16,
        target_mean_angle=0.0, target_uncertainty=math.radians(2.0),
        target_grid_spacing=math.radians(0.5), target_power=1.0,
        clutter_angles=np.radians(TABLE_CLUTTER_DEG),
        clutter_powers=np.full(10, 1000.0), noise_power=1.0)


@pytest.fixture(scope="session")
def desk_scenario():
    """32-antenna variant with the sector and clutter scaled to match."""
    return Scenario(
        n_tx=32, n_rx=32, n_rf=8, code_len=16,
        target_mean_angle=0.0, target_uncertainty=math.radians(8.0),
        target_grid_spacing=math.radians(1.0), target_power=1.0,
        clutter_angles=np.radians(TABLE_CLUTTER_DEG),
        clutter_powers=np.full(10, 10 ** 1.5), noise_power=1.0)


@pytest.fixture(scope="session")
def tiny_scenario():
    """Small, fast configuration for structural checks."""
    return Scenario(
        n_tx=8, n_rx=6, n_rf=2, code_len=4,
        target_mean_angle=0.1, target_uncertainty=math.radians(2.0),
        target_grid_spacing=math.radians(1.0), target_power=2.0,
        clutter_angles=np.radians([-40.0, 35.0]),
        clutter_powers=np.array([5.0, 8.0]), noise_power=1.0)
