import numpy as np
from loguru import logger

from diveq.autodiff import Tensor
from diveq.codebook import UsageStats
from diveq.utils.checks import ShapeError


def _as_array(values) -> np.ndarray:
    return values.data if isinstance(values, Tensor) else np.asarray(values, dtype=np.float64)


def distortion(z_batch, hard_points) -> float:
    r"""Mean squared quantization error

    $$
    D = \frac{1}{N} \sum_{n=1}^{N} \|z_n - \hat{z}_n\|_2^2
    $$

    Parameters
    ----------
    z_batch : Union[Tensor, np.ndarray]
        $N \times D$ latents.
    hard_points : Union[Tensor, np.ndarray]
        Their quantized values $\hat{z}_n$.
    """
    z_batch, hard_points = _as_array(z_batch), _as_array(hard_points)
    if z_batch.shape != hard_points.shape or z_batch.ndim != 2:
        raise ShapeError("distortion", [z_batch.shape, hard_points.shape])
    if len(z_batch) == 0:
        raise ValueError("Distortion of an empty batch is undefined")
    return float(np.mean(np.sum((z_batch - hard_points) ** 2, axis=1)))


def entropy_bits(probs: np.ndarray) -> float:
    r"""Entropy in bits $H_2 = -\sum_k p_k \log_2 p_k$"""
    probs = np.asarray(probs, dtype=np.float64)
    used = probs[probs > 0]
    return max(float(-np.sum(used * np.log2(used))), 0.0)


def distortion_per_bit(distortion: float, usage: UsageStats, warn: bool = True) -> float:
    r"""Distortion left per bit of codebook entropy

    $$
    D_{\text{per bit}} = \frac{D}{H_2(\mathcal{C})}
    $$

    A zero entropy (a single used codeword) yields ``inf``, logged as a
    warning unless ``warn`` is ``False``.
    """
    if not usage.has_data:
        raise ValueError("Distortion per bit needs at least one recorded assignment")
    bits = entropy_bits(usage.probs)
    if bits == 0:
        if warn:
            logger.warning("Codebook entropy is 0 bit, distortion per bit is infinite")
        return float("inf")
    return float(distortion) / bits
