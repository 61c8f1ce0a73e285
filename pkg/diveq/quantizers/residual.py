from typing import List

import numpy as np

from diveq.autodiff import Tensor, add, as_tensor, sub
from diveq.codebook import Codebook
from diveq.quantizers.config import QuantizerConfig
from diveq.quantizers.dispatch import quantize
from diveq.quantizers.results import ResidualStageResult, mean_squared_error
from diveq.utils.checks import DiveqError, ShapeError, StageError


def quantize_residual(
    z,
    codebooks: List[Codebook],
    stage_config: QuantizerConfig,
    rng: np.random.Generator = None,
    tau: float = None,
) -> ResidualStageResult:
    r"""Residual vector quantization

    Stage $1$ quantizes $z$ and stage $s$ quantizes the residual
    $r_{s-1} = r_{s-2} - \hat{z}_{s-1}$ left by the hard assignment of the
    previous stage. The reconstruction is $\hat{z} = \sum_s \hat{z}_s$ and the
    differentiable output is the sum of the stage outputs.

    Parameters
    ----------
    codebooks : List[Codebook]
        One codebook per stage, all with the same D.
    stage_config : QuantizerConfig
        Estimator used by every stage.
    """
    if not codebooks:
        raise ValueError("Residual quantization needs at least one codebook")
    dims = {codebook.dim for codebook in codebooks}
    if len(dims) != 1:
        raise ShapeError(
            "quantize_residual", [codebook.vectors.shape for codebook in codebooks]
        )
    z = as_tensor(z)
    rng = np.random.default_rng(stage_config.rng_seed) if rng is None else rng

    stage_input = z
    stage_results, residuals = [], []
    z_hat_total = np.zeros_like(z.data)
    z_q = None
    for stage_index, codebook in enumerate(codebooks):
        try:
            result = quantize(stage_input, codebook, stage_config, rng=rng, tau=tau)
        except (DiveqError, ValueError) as error:
            raise StageError(stage_index, error) from error
        residual = sub(stage_input, Tensor(result.hard_points))
        stage_results.append(result)
        residuals.append(residual)
        z_hat_total = z_hat_total + result.hard_points
        z_q = result.z_q if z_q is None else add(z_q, result.z_q)
        stage_input = residual

    return ResidualStageResult(
        stage_results=stage_results,
        residuals=residuals,
        z_hat_total=z_hat_total,
        z_q=z_q,
        distortion=mean_squared_error(z.data, z_hat_total),
    )
