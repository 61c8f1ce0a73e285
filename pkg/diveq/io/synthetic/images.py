from typing import Tuple

import numpy as np

PATTERNS = ("horizontal_bar", "vertical_bar", "blob")


def _bar(generator: np.random.Generator, side: int, vertical: bool) -> np.ndarray:
    image = np.zeros((side, side))
    width = generator.integers(1, 3)
    start = generator.integers(0, side - width + 1)
    if vertical:
        image[:, start : start + width] = 1.0
    else:
        image[start : start + width, :] = 1.0
    return image


def _blob(generator: np.random.Generator, side: int) -> np.ndarray:
    row, col = generator.uniform(0.0, side - 1, size=2)
    spread = generator.uniform(0.8, 2.0)
    grid_rows, grid_cols = np.mgrid[0:side, 0:side]
    squared = (grid_rows - row) ** 2 + (grid_cols - col) ** 2
    return np.exp(-squared / (2 * spread**2))


def generate_grid_images(
    generator: np.random.Generator,
    size: int,
    side: int,
    noise: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """Grayscale bars and blobs flattened row-major to ``side * side`` pixels

    Pixel values are clipped to $[0, 1]$. Labels index ``PATTERNS``.
    """
    labels = generator.integers(0, len(PATTERNS), size=size)
    images = np.empty((size, side * side))
    for row, label in enumerate(labels):
        pattern = PATTERNS[label]
        if pattern == "blob":
            image = _blob(generator, side)
        else:
            image = _bar(generator, side, vertical=pattern == "vertical_bar")
        images[row] = image.ravel()
    images += noise * generator.standard_normal(images.shape)
    return np.clip(images, 0.0, 1.0), labels
