from typing import List, Tuple

import numpy as np
from loguru import logger

from diveq.codebook import Codebook, nearest
from diveq.utils.checks import InsufficientDataError


def kmeans_plusplus_init(
    data: np.ndarray, num_codewords: int, generator: np.random.Generator
) -> np.ndarray:
    r"""k-means++ seeding

    The first center is a uniform sample, every next one is drawn with
    probability proportional to $\min_j \|x - c_j\|^2$.
    """
    if len(data) < num_codewords:
        raise InsufficientDataError("k-means++ seeding", len(data), num_codewords)
    centers = np.empty((num_codewords, data.shape[1]))
    centers[0] = data[generator.integers(len(data))]
    squared = np.sum((data - centers[0]) ** 2, axis=1)
    for position in range(1, num_codewords):
        grand_total = squared.sum()
        if grand_total > 0:
            chosen = generator.choice(len(data), p=squared / grand_total)
        else:
            chosen = generator.integers(len(data))
        centers[position] = data[chosen]
        squared = np.minimum(squared, np.sum((data - centers[position]) ** 2, axis=1))
    return centers


def _lloyd_run(
    data: np.ndarray,
    centers: np.ndarray,
    max_iterations: int,
) -> Tuple[np.ndarray, float]:
    assignments = None
    for _ in range(max_iterations):
        new_assignments, distances = nearest(data, centers)
        if assignments is not None and np.array_equal(new_assignments, assignments):
            break
        assignments = new_assignments
        counts = np.bincount(assignments, minlength=len(centers))
        for position in np.flatnonzero(counts == 0):
            # Empty clusters restart on the sample farthest from its center.
            farthest = int(np.argmax(distances))
            centers[position] = data[farthest]
            distances[farthest] = 0.0
        sums = np.zeros_like(centers)
        np.add.at(sums, assignments, data)
        filled = counts > 0
        centers[filled] = sums[filled] / counts[filled, None]
    _, distances = nearest(data, centers)
    return centers, float(np.mean(distances**2))


def lloyd(
    data: np.ndarray,
    num_codewords: int,
    generator: np.random.Generator,
    n_restarts: int = 10,
    max_iterations: int = 300,
) -> Tuple[np.ndarray, float]:
    r"""Lloyd's algorithm run to convergence, best of ``n_restarts`` k-means++ seeds

    Returns
    -------
    Tuple[np.ndarray, float]
        Best centers and their distortion $\frac{1}{N}\sum_n \|x_n - \hat{x}_n\|^2$.
    """
    data = np.asarray(data, dtype=np.float64)
    best_centers, best_distortion = None, np.inf
    for _ in range(n_restarts):
        seeds = kmeans_plusplus_init(data, num_codewords, generator)
        centers, distortion = _lloyd_run(data, seeds, max_iterations)
        if distortion < best_distortion:
            best_centers, best_distortion = centers, distortion
    logger.debug("Lloyd distortion with K={}: {}", num_codewords, best_distortion)
    return best_centers, best_distortion


def fit_residual_codebooks(
    data: np.ndarray,
    num_codewords: int,
    num_stages: int,
    generator: np.random.Generator,
    n_restarts: int = 3,
) -> List[Codebook]:
    """Stage codebooks of a hard residual quantizer, each fitted by Lloyd on the residuals left by the previous ones"""
    residuals = np.asarray(data, dtype=np.float64)
    codebooks = []
    for _ in range(num_stages):
        centers, _ = lloyd(residuals, num_codewords, generator, n_restarts=n_restarts)
        indices, _ = nearest(residuals, centers)
        residuals = residuals - centers[indices]
        codebooks.append(Codebook(centers))
    return codebooks
