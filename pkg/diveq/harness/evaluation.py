from typing import Dict, List, Union

import numpy as np

from diveq.autodiff import Tensor
from diveq.codebook import Codebook, UsageStats
from diveq.harness.autoencoder import Autoencoder
from diveq.metrics import distortion, distortion_per_bit, entropy_bits
from diveq.quantizers import Method, QuantizerConfig, quantize_curve, quantize_residual

Codebooks = Union[Codebook, List[Codebook]]


def _as_list(codebooks: Codebooks) -> List[Codebook]:
    return [codebooks] if isinstance(codebooks, Codebook) else list(codebooks)


def evaluate_codebook(
    codebooks: Codebooks, data: np.ndarray, space_filling: bool = False
) -> Dict[str, float]:
    """Evaluation of trained codebooks on held-out vectors

    Several codebooks are read as the stages of a residual quantizer and
    quantize with hard VQ. Usage statistics are those of the first stage.

    Parameters
    ----------
    space_filling : bool, optional
        Quantize onto the curve through consecutive codewords of a single
        codebook instead, with usage credited to the nearer endpoint.
    """
    codebooks = _as_list(codebooks)
    data = np.asarray(data, dtype=np.float64)
    first = codebooks[0]
    if space_filling and len(codebooks) == 1 and first.num_codewords > 1:
        result = quantize_curve(data, first)
        reconstruction, credited = result.hard_points, result.usage_indices
    else:
        residual = quantize_residual(data, codebooks, QuantizerConfig(method=Method.HARD))
        reconstruction, credited = residual.z_hat_total, residual.stage_results[0].indices
    usage = UsageStats.from_counts(np.bincount(credited, minlength=first.num_codewords))
    value = distortion(data, reconstruction)
    return {
        "distortion": value,
        "perplexity": usage.perplexity,
        "usage_fraction": usage.usage_fraction,
        "entropy_bits": entropy_bits(usage.probs),
        "distortion_per_bit": distortion_per_bit(value, usage, warn=False),
    }


def evaluate_autoencoder(
    model: Autoencoder, codebooks: Codebooks, data: np.ndarray
) -> Dict[str, float]:
    """Reconstruction error through the hard-VQ bottleneck, plus latent statistics"""
    codebooks = _as_list(codebooks)
    latents = model.encode(np.asarray(data, dtype=np.float64)).data
    result = quantize_residual(latents, codebooks, QuantizerConfig(method=Method.HARD))
    reconstruction = model.decode(Tensor(result.z_hat_total)).data
    scores = evaluate_codebook(codebooks, latents)
    scores["recon"] = float(np.mean((data - reconstruction) ** 2))
    return scores
