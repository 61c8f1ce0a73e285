r"""Noise-substitution estimators

Both estimators replace the quantization error by a vector of the same length
$\|z - c_{i^*}\|_2$ along a stopped direction; the length carries the gradient
to $z$ and to the selected codeword.
"""

from typing import List

import numpy as np

from diveq.autodiff import (
    EPS,
    add,
    gather_rows,
    l2norm,
    mul,
    stop_gradient,
    straight_through,
    sub,
)
from diveq.codebook import Codebook
from diveq.quantizers.config import Method
from diveq.quantizers.results import QuantizationResult, mean_squared_error
from diveq.quantizers.straight_through import assign
from diveq.utils.checks import NoiseResamplingError, check_positive, raise_on_errors

MAX_RESAMPLING = 10


def directional_noise(
    rng: np.random.Generator,
    offsets: List[np.ndarray],
    std: float,
    estimator: str,
    every_row: bool = False,
) -> List[np.ndarray]:
    r"""Draws $v \sim \mathcal{N}(0, \text{std}^2 I)$ once per sample and shifts it

    Returns $v + o$ for every offset $o$. A row is redrawn while one of its
    shifted vectors is shorter than the guard, unless the matching offset is
    itself below the guard (the caller drops that direction); ``every_row``
    requires all rows to be valid.
    """
    reference = offsets[0]
    noise = rng.normal(0.0, std, size=reference.shape)
    needed = [
        np.ones(len(offset), dtype=bool)
        if every_row
        else np.linalg.norm(offset, axis=1) >= EPS
        for offset in offsets
    ]
    for _ in range(MAX_RESAMPLING):
        shifted = [noise + offset for offset in offsets]
        redraw = np.zeros(len(reference), dtype=bool)
        for values, mask in zip(shifted, needed):
            redraw |= mask & (np.linalg.norm(values, axis=1) < EPS)
        if not redraw.any():
            return shifted
        noise[redraw] = rng.normal(0.0, std, size=(int(redraw.sum()), reference.shape[1]))
    raise NoiseResamplingError(estimator, MAX_RESAMPLING)


def unit_directions(vectors: np.ndarray, keep: np.ndarray = None) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1)
    directions = vectors / np.where(norms > 0, norms, 1.0)[:, None]
    if keep is not None:
        directions[~keep] = 0.0
    return directions


def quantize_nsvq(z, codebook: Codebook, rng: np.random.Generator) -> QuantizationResult:
    r"""Noise substitution $z_q = z + \|z - c_{i^*}\| \cdot sg[v / \|v\|]$, $v \sim \mathcal{N}(0, I)$"""
    z, indices, hard = assign(z, codebook)
    codewords = gather_rows(codebook.vectors, indices)
    (noise,) = directional_noise(rng, [np.zeros_like(hard)], 1.0, "NSVQ", every_row=True)
    direction = stop_gradient(unit_directions(noise))
    radius = l2norm(sub(z, codewords), axis=1, keepdims=True)
    return QuantizationResult(
        method=Method.NSVQ,
        z_q=add(z, mul(radius, direction)),
        indices=indices,
        hard_points=hard,
        distortion=mean_squared_error(z.data, hard),
        codewords=codewords,
    )


def quantize_diveq(
    z,
    codebook: Codebook,
    sigma2: float,
    rng: np.random.Generator,
) -> QuantizationResult:
    r"""Differentiable quantization with directional noise

    $$
    v_d = v + (c_{i^*} - z), \quad v \sim \mathcal{N}(0, \sigma^2 I), \quad
    z_q = z + \|c_{i^*} - z\|_2 \cdot sg\left[\frac{v_d}{\|v_d\|_2}\right]
    $$

    As $\sigma^2 \to 0$ the direction points at the codeword and $z_q \to c_{i^*}$.
    Samples already on their codeword are returned unchanged.
    """
    raise_on_errors(check_positive(sigma2, "sigma2"))
    z, indices, hard = assign(z, codebook)
    codewords = gather_rows(codebook.vectors, indices)
    offset = hard - z.data
    (shifted,) = directional_noise(rng, [offset], np.sqrt(sigma2), "DiVeQ")
    on_codeword = np.linalg.norm(offset, axis=1) < EPS
    direction = stop_gradient(unit_directions(shifted, keep=~on_codeword))
    radius = l2norm(sub(codewords, z), axis=1, keepdims=True)
    return QuantizationResult(
        method=Method.DIVEQ,
        z_q=add(z, mul(radius, direction)),
        indices=indices,
        hard_points=hard,
        distortion=mean_squared_error(z.data, hard),
        codewords=codewords,
    )


def quantize_diveq_detach(z, codebook: Codebook) -> QuantizationResult:
    r"""DiVeQ without noise: $z_q = z + \|c_{i^*} - z\| \cdot sg[(c_{i^*} - z) / \|c_{i^*} - z\|]$

    The forward value is pinned to $c_{i^*}$.
    """
    z, indices, hard = assign(z, codebook)
    codewords = gather_rows(codebook.vectors, indices)
    offset = hard - z.data
    on_codeword = np.linalg.norm(offset, axis=1) < EPS
    direction = stop_gradient(unit_directions(offset, keep=~on_codeword))
    radius = l2norm(sub(codewords, z), axis=1, keepdims=True)
    return QuantizationResult(
        method=Method.DIVEQ_DETACH,
        z_q=straight_through(add(z, mul(radius, direction)), hard),
        indices=indices,
        hard_points=hard,
        distortion=mean_squared_error(z.data, hard),
        codewords=codewords,
    )
