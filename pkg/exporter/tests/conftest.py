import numpy as np
import pytest
from PIL import Image

from embed_exporter import HashedProjectionModel


def make_image(width=32, height=24, tint=0):
    """Deterministic RGB gradient test image."""
    data = np.zeros((height, width, 3), dtype=np.uint8)
    for y in range(height):
        for x in range(width):
            data[y, x] = ((x * 8 + tint) % 256, (y * 10) % 256, (x + y) % 256)
    return Image.fromarray(data, "RGB")


@pytest.fixture()
def image_file(tmp_path):
    path = tmp_path / "scene.png"
    make_image().save(path)
    return path


@pytest.fixture(scope="session")
def model():
    return HashedProjectionModel(seed=1, dim=48)
