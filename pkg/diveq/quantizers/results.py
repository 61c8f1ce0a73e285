from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from diveq.autodiff import Tensor
from diveq.quantizers.config import Method


def mean_squared_error(z: np.ndarray, targets: np.ndarray) -> float:
    if len(z) == 0:
        return 0.0
    return float(np.mean(np.sum((z - targets) ** 2, axis=1)))


@dataclass
class RotationFactors:
    r"""Frozen factors of $sg[\rho R]$ per sample

    ``fallback`` marks the samples quantized with straight-through semantics
    because $\|z\|$, $\|c\|$ or $\|\bar{z} + \bar{c}\|$ vanished; their
    factors are the identity (``rho`` 1, the vectors zero).
    """

    rho: np.ndarray
    r: np.ndarray
    z_bar: np.ndarray
    c_bar: np.ndarray
    fallback: np.ndarray


@dataclass
class GumbelSample:
    logits: np.ndarray
    gumbels: np.ndarray
    y: Tensor
    onehot: np.ndarray
    tau: float


@dataclass
class QuantizationResult:
    """Output of one estimator on a batch

    Attributes
    ----------
    z_q: Tensor
        Quantized latents, differentiable according to the estimator.
    indices: np.ndarray
        Selected codeword (or segment, for space-filling variants) per sample.
    hard_points: np.ndarray
        Non-differentiable hard-assignment targets.
    distortion: float
        Mean squared distance between latents and ``hard_points``.
    codewords: Tensor
        Differentiable gather of the selected codewords, used by the codebook
        and commitment terms.
    lambdas: Optional[np.ndarray]
        Interpolation factors of the space-filling variants.
    """

    method: Method
    z_q: Tensor
    indices: np.ndarray
    hard_points: np.ndarray
    distortion: float
    codewords: Tensor
    lambdas: Optional[np.ndarray] = None
    gumbel: Optional[GumbelSample] = None
    rotation: Optional[RotationFactors] = None
    fallback_count: int = 0

    @property
    def usage_indices(self) -> np.ndarray:
        """Codeword credited with each sample in usage counters

        A sample landing on segment ``j`` is credited to the nearer endpoint.
        """
        if self.lambdas is None:
            return self.indices
        return self.indices + (self.lambdas >= 0.5).astype(np.int64)


@dataclass
class ResidualStageResult:
    stage_results: List[QuantizationResult]
    residuals: List[Tensor]
    z_hat_total: np.ndarray
    z_q: Tensor
    distortion: float = field(default=0.0)

    @property
    def num_stages(self) -> int:
        return len(self.stage_results)
