from typing import Tuple

import numpy as np


def circle_means(num_components: int, radius: float, dims: int) -> np.ndarray:
    """Component means evenly spaced on a circle in the first two coordinates"""
    angles = 2 * np.pi * np.arange(num_components) / num_components
    means = np.zeros((num_components, dims))
    means[:, 0] = radius * np.cos(angles)
    means[:, 1] = radius * np.sin(angles)
    return means


def generate_gaussian_mixture(
    generator: np.random.Generator,
    size: int,
    means: np.ndarray,
    std: float,
) -> Tuple[np.ndarray, np.ndarray]:
    num_components, dims = means.shape
    labels = generator.integers(0, num_components, size=size)
    data = means[labels] + std * generator.standard_normal((size, dims))
    return data, labels


def generate_ring(
    generator: np.random.Generator,
    size: int,
    dims: int,
    radius: float,
    noise: float,
) -> np.ndarray:
    angles = generator.uniform(0.0, 2 * np.pi, size=size)
    data = noise * generator.standard_normal((size, dims))
    data[:, 0] += radius * np.cos(angles)
    data[:, 1] += radius * np.sin(angles)
    return data


def generate_uniform_cube(
    generator: np.random.Generator,
    size: int,
    dims: int,
    low: float,
    high: float,
) -> np.ndarray:
    return generator.uniform(low, high, size=(size, dims))
