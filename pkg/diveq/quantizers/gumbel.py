from typing import Tuple

import numpy as np

from diveq.autodiff import (
    Tensor,
    add,
    as_tensor,
    gather_rows,
    matmul,
    reshape,
    scale,
    softmax,
    square,
    straight_through,
    sub,
    total,
    transpose,
)
from diveq.autodiff.tensor import freeze_value
from diveq.codebook import Codebook
from diveq.quantizers.config import Method
from diveq.quantizers.results import GumbelSample, QuantizationResult, mean_squared_error
from diveq.utils.checks import ShapeError, check_positive, raise_on_errors


def sample_gumbels(rng: np.random.Generator, shape: Tuple[int, ...]) -> np.ndarray:
    uniform = rng.uniform(np.finfo(np.float64).tiny, 1.0, size=shape)
    return -np.log(-np.log(uniform))


def distance_logits(z: Tensor, codebook: Codebook) -> Tensor:
    r"""Logits $\log \pi_i = -\|z - c_i\|_2^2$, differentiable in $z$ and $c$"""
    vectors = codebook.vectors
    latent_norms = total(square(z), axis=1, keepdims=True)
    codeword_norms = reshape(total(square(vectors), axis=1), (1, codebook.num_codewords))
    cross = matmul(z, transpose(vectors))
    return sub(scale(cross, 2.0), add(latent_norms, codeword_norms))


def quantize_stgs(
    z,
    codebook: Codebook,
    tau: float,
    rng: np.random.Generator = None,
    gumbels: np.ndarray = None,
) -> QuantizationResult:
    r"""Straight-through Gumbel-Softmax

    $$
    y_i = \frac{\exp((\log \pi_i + g_i) / \tau)}{\sum_j \exp((\log \pi_j + g_j) / \tau)}
    $$

    The forward value is the codeword of $\mathrm{argmax}\ y$; the cotangent
    flows through the soft mixture $y \cdot C$ into $z$ and the codebook.

    Parameters
    ----------
    tau : float
        Temperature, strictly positive.
    rng : np.random.Generator, optional
        Source of the Gumbel noise when ``gumbels`` is not given.
    gumbels : np.ndarray, optional
        $N \times K$ frozen Gumbel noise.
    """
    raise_on_errors(check_positive(tau, "tau"))
    z = as_tensor(z)
    if z.ndim != 2 or z.shape[1] != codebook.dim:
        raise ShapeError("quantize_stgs", [z.shape, codebook.vectors.shape])
    shape = (len(z), codebook.num_codewords)
    if gumbels is None:
        rng = np.random.default_rng() if rng is None else rng
        gumbels = sample_gumbels(rng, shape)
    gumbels = np.asarray(gumbels, dtype=np.float64)
    if gumbels.shape != shape:
        raise ShapeError("quantize_stgs", [shape, gumbels.shape])

    logits = distance_logits(z, codebook)
    y = softmax(scale(add(logits, Tensor(gumbels)), 1.0 / tau), axis=1)
    indices = freeze_value(np.argmax(y.data, axis=1))
    onehot = np.zeros(shape)
    onehot[np.arange(len(indices)), indices] = 1.0
    hard = codebook.vectors.data[indices]
    soft = matmul(y, codebook.vectors)

    return QuantizationResult(
        method=Method.STGS,
        z_q=straight_through(soft, hard),
        indices=indices,
        hard_points=hard,
        distortion=mean_squared_error(z.data, hard),
        codewords=gather_rows(codebook.vectors, indices),
        gumbel=GumbelSample(
            logits=logits.data,
            gumbels=gumbels,
            y=y,
            onehot=onehot,
            tau=float(tau),
        ),
    )
