import numpy as np
import pytest

from qnprox import ForwardModel, make_radial_trajectory, make_sensitivities


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def small_model():
    """32x32 image, 8 radial spokes x 32 readouts, 2 coils."""
    traj = make_radial_trajectory(8, 32)
    maps = make_sensitivities(32, 2)
    return ForwardModel(traj, maps)
