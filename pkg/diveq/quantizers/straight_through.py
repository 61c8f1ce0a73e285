from typing import Tuple

import numpy as np
from loguru import logger

from diveq.autodiff import Tensor, as_tensor, gather_rows, straight_through
from diveq.codebook import Codebook, nearest
from diveq.quantizers.config import Method
from diveq.quantizers.results import QuantizationResult, mean_squared_error
from diveq.utils.checks import ShapeError, check_probability, raise_on_errors


def assign(z, codebook: Codebook) -> Tuple[Tensor, np.ndarray, np.ndarray]:
    z = as_tensor(z)
    indices, _ = nearest(z, codebook)
    return z, indices, codebook.vectors.data[indices]


def quantize_hard(z, codebook: Codebook) -> QuantizationResult:
    r"""Nearest-codeword quantization without any gradient

    $$
    \hat{z} = c_{i^*}, \quad i^* = \underset{j}{\mathrm{argmin}} \|z - c_j\|_2
    $$
    """
    z, indices, hard = assign(z, codebook)
    return QuantizationResult(
        method=Method.HARD,
        z_q=Tensor(hard),
        indices=indices,
        hard_points=hard,
        distortion=mean_squared_error(z.data, hard),
        codewords=gather_rows(codebook.vectors, indices),
    )


def quantize_ste(z, codebook: Codebook) -> QuantizationResult:
    r"""Straight-through estimator $z_q = z + sg[\hat{z} - z]$

    The forward value is the selected codeword; the cotangent of $z_q$ is
    copied to $z$ and nothing reaches the codebook through this path.
    """
    z, indices, hard = assign(z, codebook)
    return QuantizationResult(
        method=Method.STE,
        z_q=straight_through(z, hard),
        indices=indices,
        hard_points=hard,
        distortion=mean_squared_error(z.data, hard),
        codewords=gather_rows(codebook.vectors, indices),
    )


def ema_update(
    codebook: Codebook,
    z_batch,
    indices: np.ndarray,
    gamma: float,
) -> np.ndarray:
    r"""Moving-average codebook update

    $$
    \begin{aligned}
    h_i & \leftarrow \gamma h_i + (1 - \gamma) n_i \\
    g_i & \leftarrow \gamma g_i + (1 - \gamma) \sum_{z \mapsto i} z \\
    c_i & \leftarrow g_i / h_i
    \end{aligned}
    $$

    Accumulators decay for every codeword; only the codewords selected in this
    batch are recomputed.

    Returns
    -------
    np.ndarray
        Boolean mask of the updated codewords.
    """
    if not 0 <= gamma < 1:
        raise_on_errors(check_probability(gamma, "gamma", closed_low=True))
    latents = z_batch.data if isinstance(z_batch, Tensor) else np.asarray(z_batch, np.float64)
    indices = np.asarray(indices, dtype=np.int64)
    if latents.ndim != 2 or latents.shape[1] != codebook.dim or len(latents) != len(indices):
        raise ShapeError("ema_update", [latents.shape, indices.shape, codebook.vectors.shape])
    if not codebook.has_ema:
        codebook.ema_g = codebook.vectors.data.copy()
        codebook.ema_h = np.ones(codebook.num_codewords)

    counts = np.bincount(indices, minlength=codebook.num_codewords).astype(np.float64)
    sums = np.zeros_like(codebook.ema_g)
    np.add.at(sums, indices, latents)

    codebook.ema_h = gamma * codebook.ema_h + (1.0 - gamma) * counts
    codebook.ema_g = gamma * codebook.ema_g + (1.0 - gamma) * sums

    selected = counts > 0
    empty = selected & (codebook.ema_h <= 0)
    if empty.any():
        logger.warning(
            "EMA counts vanished for codewords {}, leaving them unchanged",
            np.flatnonzero(empty).tolist(),
        )
    updated = selected & ~empty
    codebook.vectors.data[updated] = (
        codebook.ema_g[updated] / codebook.ema_h[updated][:, None]
    )
    return updated
