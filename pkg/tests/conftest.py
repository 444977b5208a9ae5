import numpy as np
import pytest

from restudio.fixtures import natural_image
from restudio.imagecore import Colorspace, ImageBuffer


def rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def random_image(seed: int, size: int = 32, channels: int = 1) -> ImageBuffer:
    data = rng(seed).uniform(0.0, 1.0, (size, size, channels))
    space = Colorspace.LINEAR_GRAY if channels == 1 else Colorspace.SRGB
    return ImageBuffer(data, space)


@pytest.fixture(scope="session")
def camera():
    return natural_image("camera")


@pytest.fixture(scope="session")
def astronaut():
    return natural_image("astronaut")


@pytest.fixture(scope="session")
def coffee():
    return natural_image("coffee")
