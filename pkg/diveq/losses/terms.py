from dataclasses import dataclass
from typing import Dict

import numpy as np

from diveq.autodiff import (
    Tensor,
    add,
    as_tensor,
    log,
    mean,
    mul,
    scale,
    square,
    stop_gradient,
    sub,
    total,
)
from diveq.quantizers import GumbelSample, QuantizationResult
from diveq.utils.checks import ShapeError

# Keeps log finite on codewords with zero mean assignment.
LOG_FLOOR = 1e-12


def _zero() -> Tensor:
    return Tensor(0.0)


@dataclass
class LossBreakdown:
    """Terms of a training objective

    Every term is a scalar Tensor; inactive terms are exact zeros and
    ``total`` is the sum actually backpropagated.
    """

    reconstruction: Tensor
    codebook_term: Tensor
    commitment_term: Tensor
    kl_term: Tensor
    total: Tensor

    def values(self) -> Dict[str, float]:
        return {
            "total_loss": self.total.item(),
            "recon": self.reconstruction.item(),
            "codebook_term": self.codebook_term.item(),
            "commitment_term": self.commitment_term.item(),
            "kl_term": self.kl_term.item(),
        }

    @property
    def auxiliary(self) -> float:
        return self.codebook_term.item() + self.commitment_term.item() + self.kl_term.item()


def reconstruction_error(x, x_r) -> Tensor:
    """Mean over every entry of the squared difference"""
    x, x_r = as_tensor(x), as_tensor(x_r)
    if x.shape != x_r.shape:
        raise ShapeError("reconstruction", [x.shape, x_r.shape])
    return mean(square(sub(x, x_r)))


def _squared_rows(values: Tensor) -> Tensor:
    return mean(total(square(values), axis=1))


def loss_ste_family(
    x,
    x_r,
    z,
    quantization: QuantizationResult,
    alpha: float,
    beta: float,
    with_codebook_term: bool = True,
) -> LossBreakdown:
    r"""Straight-through objective

    $$
    \mathcal{L} = \mathrm{MSE}(x, x_r)
    + \alpha \|sg[z] - c_{i^*}\|_2^2
    + \beta \|z - sg[c_{i^*}]\|_2^2
    $$

    The squared norms are averaged over the batch. The EMA estimator sets
    ``with_codebook_term=False``.
    """
    z = as_tensor(z)
    codewords = quantization.codewords
    if z.shape != codewords.shape:
        raise ShapeError("loss_ste_family", [z.shape, codewords.shape])
    reconstruction = reconstruction_error(x, x_r)
    codebook_term = (
        scale(_squared_rows(sub(stop_gradient(z), codewords)), alpha)
        if with_codebook_term
        else _zero()
    )
    commitment_term = scale(_squared_rows(sub(z, stop_gradient(codewords))), beta)
    return LossBreakdown(
        reconstruction=reconstruction,
        codebook_term=codebook_term,
        commitment_term=commitment_term,
        kl_term=_zero(),
        total=add(add(reconstruction, codebook_term), commitment_term),
    )


def kl_to_uniform(y: Tensor) -> Tensor:
    r"""$D_{KL}(\bar{q} \,\|\, U_K) = \log K - H(\bar{q})$ with $\bar{q}$ the batch mean of $y$"""
    num_codewords = y.shape[1]
    average = mean(y, axis=0)
    return add(total(mul(average, log(add(average, LOG_FLOOR)))), float(np.log(num_codewords)))


def loss_gs(x, x_r, soft_assignments: GumbelSample, phi: float) -> LossBreakdown:
    r"""Gumbel-Softmax objective $\mathrm{MSE}(x, x_r) + \phi (\log K - H(\bar{q}))$"""
    reconstruction = reconstruction_error(x, x_r)
    kl_term = scale(kl_to_uniform(soft_assignments.y), phi)
    return LossBreakdown(
        reconstruction=reconstruction,
        codebook_term=_zero(),
        commitment_term=_zero(),
        kl_term=kl_term,
        total=add(reconstruction, kl_term),
    )


def loss_noise_family(x, x_r) -> LossBreakdown:
    """Reconstruction only, the codebook learns through the quantization path"""
    reconstruction = reconstruction_error(x, x_r)
    return LossBreakdown(
        reconstruction=reconstruction,
        codebook_term=_zero(),
        commitment_term=_zero(),
        kl_term=_zero(),
        total=reconstruction,
    )
