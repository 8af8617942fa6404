import numpy as np
import pytest

from depthfuse.synthetic import make_scene
from depthfuse.types import DepthMap, Image


@pytest.fixture(scope="session")
def scenes20():
    """Twenty fixed synthetic scenes shared by the slower suites."""
    return [make_scene(seed=100 + i, height=96, width=128) for i in range(20)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_image(rng, h, w):
    return Image(rng.uniform(0.0, 1.0, size=(h, w, 3)))


def random_depth(rng, h, w, lo=0.1, hi=9.0):
    return DepthMap(rng.uniform(lo, hi, size=(h, w)))
