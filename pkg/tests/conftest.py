import numpy as np
import pytest

from pvdefect.image import ImageU8


def rand_image(seed: int, h: int, w: int, channels: int = 1) -> ImageU8:
    rng = np.random.default_rng(seed)
    return ImageU8(rng.integers(0, 256, size=(h, w, channels), dtype=np.uint8))


def const_image(value: int, h: int, w: int, channels: int = 1) -> ImageU8:
    return ImageU8(np.full((h, w, channels), value, dtype=np.uint8))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
