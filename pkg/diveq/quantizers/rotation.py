import numpy as np
from loguru import logger

from diveq.autodiff import (
    add,
    gather_rows,
    mul,
    scale,
    stop_gradient,
    straight_through,
    sub,
    total,
)
from diveq.codebook import Codebook
from diveq.quantizers.config import Method
from diveq.quantizers.results import (
    QuantizationResult,
    RotationFactors,
    mean_squared_error,
)
from diveq.quantizers.straight_through import assign

NORM_FLOOR = 1e-9


def _unit_rows(values: np.ndarray, norms: np.ndarray) -> np.ndarray:
    return values / np.where(norms > 0, norms, 1.0)[:, None]


def rotation_factors(z: np.ndarray, targets: np.ndarray) -> RotationFactors:
    r"""Householder factors mapping each $z$ onto its target $c$

    $$
    \rho = \frac{\|c\|}{\|z\|}, \quad
    r = \frac{\bar{z} + \bar{c}}{\|\bar{z} + \bar{c}\|}, \quad
    R = I - 2 r r^\top + 2 \bar{c} \bar{z}^\top
    $$
    """
    z_norm = np.linalg.norm(z, axis=1)
    c_norm = np.linalg.norm(targets, axis=1)
    z_bar = _unit_rows(z, z_norm)
    c_bar = _unit_rows(targets, c_norm)
    bisector = z_bar + c_bar
    bisector_norm = np.linalg.norm(bisector, axis=1)
    fallback = (z_norm < NORM_FLOOR) | (c_norm < NORM_FLOOR) | (bisector_norm < NORM_FLOOR)

    r = _unit_rows(bisector, bisector_norm)
    rho = c_norm / np.where(z_norm > 0, z_norm, 1.0)
    rho[fallback] = 1.0
    r[fallback] = 0.0
    z_bar[fallback] = 0.0
    c_bar[fallback] = 0.0
    return RotationFactors(rho=rho, r=r, z_bar=z_bar, c_bar=c_bar, fallback=fallback)


def quantize_rt(z, codebook: Codebook) -> QuantizationResult:
    r"""Rotation trick $z_q = sg[\rho R] z$

    The rotation is applied in its rank-two form
    $\rho (z - 2 (r \cdot z) r + 2 (\bar{z} \cdot z) \bar{c})$, whose value is
    $c_{i^*}$; the forward value is pinned to the codeword. Samples with a
    vanishing norm fall back to straight-through semantics.
    """
    z, indices, hard = assign(z, codebook)
    factors = rotation_factors(z.data, hard)
    if factors.fallback.any():
        logger.warning(
            "Rotation trick fell back to STE for {} of {} samples",
            int(factors.fallback.sum()),
            len(hard),
        )

    rho = stop_gradient(factors.rho[:, None])
    r = stop_gradient(factors.r)
    z_bar = stop_gradient(factors.z_bar)
    c_bar = stop_gradient(factors.c_bar)

    along_r = total(mul(z, r), axis=1, keepdims=True)
    along_z = total(mul(z, z_bar), axis=1, keepdims=True)
    reflected = sub(z, scale(mul(along_r, r), 2.0))
    rotated = mul(rho, add(reflected, scale(mul(along_z, c_bar), 2.0)))

    return QuantizationResult(
        method=Method.RT,
        z_q=straight_through(rotated, hard),
        indices=indices,
        hard_points=hard,
        distortion=mean_squared_error(z.data, hard),
        codewords=gather_rows(codebook.vectors, indices),
        rotation=factors,
        fallback_count=int(factors.fallback.sum()),
    )
