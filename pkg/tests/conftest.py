import numpy as np
import pytest

from ortho3d.imaging import GrayImage, save_pgm

BOX = (40, 30, 20)


def rect_image(width: int, height: int, size: int = 128, x0: int = 30, y0: int = 40) -> GrayImage:
    """White ``width`` x ``height`` rectangle on black; one pixel per world unit."""
    img = np.zeros((size, size))
    img[y0:y0 + height, x0:x0 + width] = 1.0
    return GrayImage(img)


def write_box_views(directory, dims=BOX) -> dict[str, str]:
    x, y, z = dims
    shapes = {"front": (x, z), "top": (x, y), "side": (y, z)}
    paths = {}
    for i, (name, (w, h)) in enumerate(shapes.items()):
        path = directory / f"{name}.pgm"
        # different placements per view; registration must not depend on them
        save_pgm(path, rect_image(w, h, x0=20 + 7 * i, y0=30 + 5 * i))
        paths[name] = str(path)
    return paths


@pytest.fixture
def box_views(tmp_path):
    return write_box_views(tmp_path)
