r"""Space-filling variants

Latents are mapped onto the piecewise-linear curve through consecutive
codewords. Each batch draws one $\lambda_j \sim U(0, 1)$ per segment, the
dithered point of segment $j$ being $(1 - \lambda_j) c_j + \lambda_j c_{j+1}$,
and the nearest dithered point selects the segment $i^*$.
"""

from typing import Tuple

import numpy as np

from diveq.autodiff import (
    EPS,
    Tensor,
    add,
    as_tensor,
    gather_rows,
    l2norm,
    mul,
    stop_gradient,
    straight_through,
    sub,
)
from diveq.codebook import Codebook, DitheredCodebook, dither, nearest, project_onto_curve
from diveq.quantizers.config import Method
from diveq.quantizers.noise import directional_noise, unit_directions
from diveq.quantizers.results import QuantizationResult, mean_squared_error
from diveq.utils.checks import check_positive, raise_on_errors


def _segments(
    z,
    codebook: Codebook,
    rng: np.random.Generator,
    dithered: DitheredCodebook,
) -> Tuple[Tensor, np.ndarray, np.ndarray, np.ndarray]:
    z = as_tensor(z)
    if dithered is None:
        dithered = dither(codebook, rng)
    segments, _ = nearest(z, dithered.points)
    lambdas = dithered.lambdas[segments].copy()
    vectors = codebook.vectors.data
    collapsed = np.all(vectors[segments] == vectors[segments + 1], axis=1)
    lambdas[collapsed] = 0.0
    return z, segments, lambdas, dithered.points[segments]


def _result(method, z, codebook, segments, lambdas, hard, z_q) -> QuantizationResult:
    return QuantizationResult(
        method=method,
        z_q=z_q,
        indices=segments,
        hard_points=hard,
        distortion=mean_squared_error(z.data, hard),
        codewords=gather_rows(codebook.vectors, segments),
        lambdas=lambdas,
    )


def quantize_sf_diveq(
    z,
    codebook: Codebook,
    sigma2: float,
    rng: np.random.Generator,
    dithered: DitheredCodebook = None,
) -> QuantizationResult:
    r"""Space-filling DiVeQ

    $$
    z_q = z
    + \|c_{i^*} - z\| \, sg\left[(1 - \lambda_{i^*}) \frac{v_{d,i^*}}{\|v_{d,i^*}\|}\right]
    + \|c_{i^*+1} - z\| \, sg\left[\lambda_{i^*} \frac{v_{d,i^*+1}}{\|v_{d,i^*+1}\|}\right]
    $$

    with $v_{d,\cdot} = v + (c_\cdot - z)$ sharing one $v \sim \mathcal{N}(0, \sigma^2 I)$
    per sample. A collapsed segment ($c_{i^*} = c_{i^*+1}$) behaves as DiVeQ
    toward its start.

    Parameters
    ----------
    dithered : DitheredCodebook, optional
        Frozen dithering; drawn from ``rng`` when missing.
    """
    raise_on_errors(check_positive(sigma2, "sigma2"))
    z, segments, lambdas, hard = _segments(z, codebook, rng, dithered)
    vectors = codebook.vectors.data
    start_offset = vectors[segments] - z.data
    end_offset = vectors[segments + 1] - z.data
    start_shifted, end_shifted = directional_noise(
        rng, [start_offset, end_offset], np.sqrt(sigma2), "SF-DiVeQ"
    )
    weights = lambdas[:, None]
    start_direction = (1.0 - weights) * unit_directions(
        start_shifted, keep=np.linalg.norm(start_offset, axis=1) >= EPS
    )
    end_direction = weights * unit_directions(
        end_shifted, keep=np.linalg.norm(end_offset, axis=1) >= EPS
    )

    start = gather_rows(codebook.vectors, segments)
    end = gather_rows(codebook.vectors, segments + 1)
    z_q = add(
        add(z, mul(l2norm(sub(start, z), axis=1, keepdims=True), stop_gradient(start_direction))),
        mul(l2norm(sub(end, z), axis=1, keepdims=True), stop_gradient(end_direction)),
    )
    return _result(Method.SF_DIVEQ, z, codebook, segments, lambdas, hard, z_q)


def quantize_sf_diveq_detach(
    z,
    codebook: Codebook,
    rng: np.random.Generator,
    dithered: DitheredCodebook = None,
) -> QuantizationResult:
    """Space-filling DiVeQ without noise, pinned to the winning dithered point"""
    z, segments, lambdas, hard = _segments(z, codebook, rng, dithered)
    vectors = codebook.vectors.data
    start_offset = vectors[segments] - z.data
    end_offset = vectors[segments + 1] - z.data
    weights = lambdas[:, None]
    start_direction = (1.0 - weights) * unit_directions(
        start_offset, keep=np.linalg.norm(start_offset, axis=1) >= EPS
    )
    end_direction = weights * unit_directions(
        end_offset, keep=np.linalg.norm(end_offset, axis=1) >= EPS
    )

    start = gather_rows(codebook.vectors, segments)
    end = gather_rows(codebook.vectors, segments + 1)
    expression = add(
        add(z, mul(l2norm(sub(start, z), axis=1, keepdims=True), stop_gradient(start_direction))),
        mul(l2norm(sub(end, z), axis=1, keepdims=True), stop_gradient(end_direction)),
    )
    z_q = straight_through(expression, hard)
    return _result(Method.SF_DIVEQ_DETACH, z, codebook, segments, lambdas, hard, z_q)


def quantize_curve(z, codebook: Codebook) -> QuantizationResult:
    r"""Quantization onto the curve itself, without dithering or gradient

    The latent maps to its nearest point on the piecewise-linear curve
    through consecutive codewords, the limit of dithered quantization over
    every draw of $\lambda$. ``usage_indices`` credits the nearer endpoint.
    """
    z = as_tensor(z)
    segments, lambdas, points = project_onto_curve(z, codebook)
    return _result(Method.HARD, z, codebook, segments, lambdas, points, Tensor(points))
