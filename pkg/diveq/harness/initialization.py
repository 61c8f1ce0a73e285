from typing import Union

import numpy as np
from loguru import logger

from diveq.codebook import Codebook, nearest
from diveq.harness.clustering import kmeans_plusplus_init, lloyd
from diveq.utils.checks import InsufficientDataError


def init_codebook_vectors(
    samples: np.ndarray,
    num_codewords: int,
    method: str,
    generator: np.random.Generator,
) -> np.ndarray:
    """Initial codewords drawn from ``samples``

    ``"data"`` picks random samples, ``"kmeans++"`` seeds like k-means++ and
    ``"point"`` puts every codeword on the same random sample.
    """
    if method == "data":
        rows = generator.choice(
            len(samples), size=num_codewords, replace=len(samples) < num_codewords
        )
        return samples[rows].copy()
    if method == "kmeans++":
        return kmeans_plusplus_init(samples, num_codewords, generator)
    if method == "point":
        return np.repeat(samples[generator.integers(len(samples))][None, :], num_codewords, axis=0)
    raise ValueError(
        "Unknown codebook init {}, options are ('data', 'kmeans++', 'point')".format(method)
    )


def sf_delayed_init(
    latent_buffer: Union[np.ndarray, list],
    num_codewords: int,
    generator: np.random.Generator = None,
) -> Codebook:
    r"""Codebook of a space-filling quantizer started after a warmup

    The trailing latents are sorted along a path through the distribution,
    then split into ``num_codewords`` contiguous groups of equal size, and
    codeword $k$ is the mean of group $k$. The path visits the cells of a
    Lloyd run on the buffer in the order of
    [path_order][diveq.harness.initialization.path_order], and the latents of
    a cell by their position along the local direction of the path. Consecutive
    codewords are therefore neighbours, and the first curve runs through the
    latent distribution.

    Parameters
    ----------
    latent_buffer : Union[np.ndarray, list]
        Latents of the last ``sf_init_window`` batches, oldest first. A list
        of batches is concatenated.
    num_codewords : int
        K.
    generator : np.random.Generator, optional
        Seeds the Lloyd run.
    """
    if isinstance(latent_buffer, list):
        latent_buffer = np.concatenate(latent_buffer) if latent_buffer else np.empty((0, 0))
    latent_buffer = np.asarray(latent_buffer, dtype=np.float64)
    if len(latent_buffer) < num_codewords:
        raise InsufficientDataError(
            "Delayed codebook init",
            len(latent_buffer),
            num_codewords,
            "please use a larger sf_init_window",
        )
    generator = generator or np.random.default_rng(0)
    centers, _ = lloyd(latent_buffer, num_codewords, generator, n_restarts=3, max_iterations=100)
    centers = centers[path_order(centers)]
    cells, _ = nearest(latent_buffer, centers)

    positions = np.arange(num_codewords)
    ahead = centers[np.minimum(positions + 1, num_codewords - 1)]
    behind = centers[np.maximum(positions - 1, 0)]
    along = np.sum((latent_buffer - centers[cells]) * (ahead - behind)[cells], axis=1)
    sequence = np.lexsort((along, cells))
    groups = np.array_split(latent_buffer[sequence], num_codewords)
    logger.info(
        "Delayed codebook init: {} codewords from {} latents", num_codewords, len(latent_buffer)
    )
    return Codebook(np.stack([group.mean(axis=0) for group in groups]))


def path_order(points: np.ndarray, max_passes: int = 50) -> np.ndarray:
    """Visiting order of a short open path through ``points``

    The path starts at the point farthest from the mean, grows by nearest
    unvisited neighbour, then is shortened by 2-opt reversals until no
    reversal helps.
    """
    points = np.asarray(points, dtype=np.float64)
    num_points = len(points)
    if num_points < 3:
        return np.arange(num_points)
    current = int(np.argmax(np.sum((points - points.mean(axis=0)) ** 2, axis=1)))
    order = [current]
    unvisited = np.ones(num_points, dtype=bool)
    unvisited[current] = False
    for _ in range(num_points - 1):
        distances = np.sum((points - points[current]) ** 2, axis=1)
        distances[~unvisited] = np.inf
        current = int(np.argmin(distances))
        order.append(current)
        unvisited[current] = False
    order = np.array(order)

    for _ in range(max_passes):
        improved = False
        for first in range(-1, num_points - 2):
            path = points[order]
            # Reversing order[first + 1 : last + 1] swaps the edges around it;
            # the head (first == -1) and the tail (last == num_points - 1)
            # have a single edge to swap.
            lasts = np.arange(first + 2, num_points)
            after = np.minimum(lasts + 1, num_points - 1)
            has_after = lasts + 1 < num_points
            old = np.where(has_after, np.linalg.norm(path[lasts] - path[after], axis=1), 0.0)
            new = np.where(
                has_after, np.linalg.norm(path[first + 1] - path[after], axis=1), 0.0
            )
            if first >= 0:
                old = old + np.linalg.norm(path[first] - path[first + 1])
                new = new + np.linalg.norm(path[first] - path[lasts], axis=1)
            gains = old - new
            best = int(np.argmax(gains))
            if gains[best] > 1e-12:
                last = lasts[best]
                order[first + 1 : last + 1] = order[first + 1 : last + 1][::-1].copy()
                improved = True
        if not improved:
            break
    return order
