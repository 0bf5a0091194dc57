import math

import numpy as np
import pytest

from prbm_ldm import Trace, TraceUnit, builtin_finger


@pytest.fixture(scope="session")
def index_finger():
    return builtin_finger("index")


@pytest.fixture
def geometry(index_finger):
    return index_finger.geometry


@pytest.fixture
def coefficients(index_finger):
    return index_finger.coefficients


@pytest.fixture
def plant(index_finger):
    return index_finger.plant


def damped_cosine(zeta, omega_n, sample_rate_hz, duration_s, theta0=1.0):
    """Free decay of the second-order joint from rest at theta0."""
    sigma = zeta * omega_n
    omega_d = omega_n * math.sqrt(1.0 - zeta * zeta)
    n = int(round(duration_s * sample_rate_hz)) + 1
    t = np.arange(n) / sample_rate_hz
    x = theta0 * np.exp(-sigma * t) * (
        np.cos(omega_d * t) + sigma / omega_d * np.sin(omega_d * t))
    return Trace(sample_rate_hz, x, TraceUnit.ANGLE_RAD)
