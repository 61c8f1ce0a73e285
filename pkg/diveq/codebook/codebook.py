from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from diveq.autodiff import Tensor
from diveq.autodiff.tensor import freeze_value
from diveq.utils.checks import ShapeError, check_dimensions

# Rows per chunk of the exhaustive search, bounded by this many float64 entries.
_SEARCH_BUDGET = 2**22


class Codebook:
    r"""Trainable dictionary $\mathcal{C}=\{c_1, \ldots, c_K\}$ of codewords

    Parameters
    ----------
    vectors : Union[Tensor, np.ndarray]
        $K \times D$ codeword matrix. Arrays are wrapped in a trainable Tensor.
    ema : bool, optional
        Allocate the moving-average accumulators used by the EMA update.
    usage_counts : np.ndarray, optional
        Assignment counters since the last replacement event.

    Attributes
    ----------
    vectors: Tensor
        Codeword matrix, a leaf of the differentiation tape.
    ema_g: Optional[np.ndarray]
        $K \times D$ running sums of assigned latents.
    ema_h: Optional[np.ndarray]
        Length-$K$ running assignment counts.
    usage_counts: np.ndarray
        Length-$K$ integer counters.

    Examples
    --------
    ```python
    import numpy as np
    from diveq.codebook import Codebook, nearest

    codebook = Codebook(np.array([[1.0, 0.0], [-1.0, 0.0]]))
    nearest(np.array([[0.9, 0.0]]), codebook)
    ```
    """

    def __init__(
        self,
        vectors: Union[Tensor, np.ndarray],
        ema: bool = False,
        usage_counts: np.ndarray = None,
        ema_g: np.ndarray = None,
        ema_h: np.ndarray = None,
    ):
        if not isinstance(vectors, Tensor):
            vectors = Tensor(vectors, requires_grad=True, name="codebook")
        if vectors.ndim != 2 or vectors.shape[0] < 1 or vectors.shape[1] < 1:
            raise ShapeError(
                "codebook", [vectors.shape], "expected a K x D matrix with K, D >= 1"
            )
        self.vectors = vectors
        num_codewords = vectors.shape[0]
        self.usage_counts = (
            np.zeros(num_codewords, dtype=np.int64)
            if usage_counts is None
            else np.asarray(usage_counts, dtype=np.int64).copy()
        )
        if self.usage_counts.shape != (num_codewords,):
            raise ShapeError("codebook", [vectors.shape, self.usage_counts.shape])
        self.ema_g = None
        self.ema_h = None
        if ema or ema_g is not None:
            self.ema_g = (
                vectors.data.copy() if ema_g is None else np.array(ema_g, np.float64)
            )
            self.ema_h = (
                np.ones(num_codewords) if ema_h is None else np.array(ema_h, np.float64)
            )
            if self.ema_g.shape != vectors.shape or self.ema_h.shape != (num_codewords,):
                raise ShapeError(
                    "codebook", [vectors.shape, self.ema_g.shape, self.ema_h.shape]
                )
            if np.any(self.ema_h < 0):
                raise ValueError("EMA counts must be non-negative")

    @property
    def num_codewords(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def has_ema(self) -> bool:
        return self.ema_g is not None

    def record_usage(self, indices: np.ndarray) -> None:
        self.usage_counts += np.bincount(
            np.asarray(indices, dtype=np.int64), minlength=self.num_codewords
        )

    def reset_usage(self) -> None:
        self.usage_counts[:] = 0

    def copy(self) -> "Codebook":
        return Codebook(
            self.vectors.data.copy(),
            usage_counts=self.usage_counts,
            ema_g=self.ema_g,
            ema_h=self.ema_h,
        )

    def __repr__(self) -> str:
        ema = ", ema" if self.has_ema else ""
        return f"Codebook(K={self.num_codewords}, D={self.dim}{ema})"


@dataclass
class UsageStats:
    """Empirical usage distribution of a codebook

    Attributes
    ----------
    probs: np.ndarray
        Usage probabilities $p_k$, all zero when no count was recorded.
    entropy: float
        Entropy in nats.
    perplexity: float
        $\\exp$ of the entropy, in $[1, K]$.
    usage_fraction: float
        Share of codewords with a nonzero count.
    has_data: bool
        ``False`` when the total count is zero.
    """

    counts: np.ndarray
    probs: np.ndarray
    entropy: float
    perplexity: float
    usage_fraction: float
    has_data: bool

    @classmethod
    def from_counts(cls, counts: np.ndarray) -> "UsageStats":
        counts = np.asarray(counts, dtype=np.int64)
        num_codewords = len(counts)
        grand_total = counts.sum()
        if grand_total == 0:
            return cls(
                counts=counts,
                probs=np.zeros(num_codewords),
                entropy=0.0,
                perplexity=1.0,
                usage_fraction=0.0,
                has_data=False,
            )
        probs = counts / grand_total
        used = probs > 0
        entropy = float(-np.sum(probs[used] * np.log(probs[used])))
        perplexity = float(np.clip(np.exp(entropy), 1.0, num_codewords))
        return cls(
            counts=counts,
            probs=probs,
            entropy=max(entropy, 0.0),
            perplexity=perplexity,
            usage_fraction=float(used.sum() / num_codewords),
            has_data=True,
        )


@dataclass
class DitheredCodebook:
    r"""Random points on the segments joining consecutive codewords

    ``points[j]`` equals $(1-\lambda_j) c_j + \lambda_j c_{j+1}$.
    """

    points: np.ndarray
    lambdas: np.ndarray

    @classmethod
    def from_lambdas(cls, codebook: Codebook, lambdas: np.ndarray) -> "DitheredCodebook":
        vectors = codebook.vectors.data
        lambdas = np.asarray(lambdas, dtype=np.float64)
        if lambdas.shape != (len(vectors) - 1,):
            raise ShapeError("dither", [vectors.shape, lambdas.shape])
        weights = lambdas[:, None]
        points = (1.0 - weights) * vectors[:-1] + weights * vectors[1:]
        return cls(points=points, lambdas=lambdas)


def _as_array(values) -> np.ndarray:
    return values.data if isinstance(values, Tensor) else np.asarray(values, np.float64)


def nearest(
    z_batch: Union[Tensor, np.ndarray],
    codebook: Union[Codebook, np.ndarray],
) -> Tuple[np.ndarray, np.ndarray]:
    r"""Exhaustive nearest-codeword search

    $$
    i^*_n = \underset{j}{\mathrm{argmin}} \|z_n - c_j\|_2
    $$

    Ties go to the lowest index. The winners are a stopped value: a gradient
    check replaying its base pass keeps them.

    Parameters
    ----------
    z_batch : Union[Tensor, np.ndarray]
        $N \times D$ latents.
    codebook : Union[Codebook, np.ndarray]
        Codebook, or any $M \times D$ matrix of candidate points.

    Returns
    -------
    Tuple[np.ndarray, np.ndarray]
        Winning indices and their Euclidean distances.
    """
    latents, candidates = _search_operands("nearest", z_batch, codebook)
    num_latents = len(latents)
    indices = np.empty(num_latents, dtype=np.int64)
    chunk = max(1, _SEARCH_BUDGET // max(candidates.size, 1))
    for start in range(0, num_latents, chunk):
        block = latents[start : start + chunk]
        squared = np.sum((block[:, None, :] - candidates[None, :, :]) ** 2, axis=-1)
        indices[start : start + chunk] = np.argmin(squared, axis=1)
    indices = freeze_value(indices)
    distances = np.linalg.norm(latents - candidates[indices], axis=1)
    return indices, distances


def project_onto_curve(
    z_batch: Union[Tensor, np.ndarray],
    codebook: Union[Codebook, np.ndarray],
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    r"""Nearest point of the piecewise-linear curve through consecutive codewords

    Each latent is projected on every segment,

    $$
    \lambda_j = \mathrm{clip}\left(
    \frac{(z - c_j) \cdot (c_{j+1} - c_j)}{\|c_{j+1} - c_j\|^2}, 0, 1\right),
    $$

    and the closest projection wins. Ties go to the lowest segment, and
    collapsed segments project on their start.

    Returns
    -------
    Tuple[np.ndarray, np.ndarray, np.ndarray]
        Winning segments, their factors $\lambda$ and the curve points.
    """
    latents, vectors = _search_operands("project_onto_curve", z_batch, codebook)
    if len(vectors) < 2:
        raise ValueError(
            "A curve needs at least 2 codewords, got {}".format(len(vectors))
        )
    starts, directions = vectors[:-1], vectors[1:] - vectors[:-1]
    lengths = np.sum(directions**2, axis=1)
    safe_lengths = np.where(lengths > 0, lengths, 1.0)
    num_latents = len(latents)
    segments = np.empty(num_latents, dtype=np.int64)
    lambdas = np.empty(num_latents, dtype=np.float64)
    chunk = max(1, _SEARCH_BUDGET // max(vectors.size, 1))
    for start in range(0, num_latents, chunk):
        offsets = latents[start : start + chunk, None, :] - starts[None, :, :]
        factors = np.clip(np.sum(offsets * directions[None], axis=-1) / safe_lengths, 0.0, 1.0)
        factors[:, lengths == 0] = 0.0
        residuals = offsets - factors[..., None] * directions[None]
        winners = np.argmin(np.sum(residuals**2, axis=-1), axis=1)
        segments[start : start + chunk] = winners
        lambdas[start : start + chunk] = factors[np.arange(len(winners)), winners]
    points = starts[segments] + lambdas[:, None] * directions[segments]
    return segments, lambdas, points


def _search_operands(primitive: str, z_batch, codebook) -> Tuple[np.ndarray, np.ndarray]:
    latents = _as_array(z_batch)
    candidates = (
        codebook.vectors.data if isinstance(codebook, Codebook) else _as_array(codebook)
    )
    if latents.ndim != 2 or candidates.ndim != 2:
        raise ShapeError(primitive, [latents.shape, candidates.shape], "expected matrices")
    check_dimensions(primitive, latents, candidates)
    return latents, candidates


def dither(codebook: Codebook, rng: np.random.Generator) -> DitheredCodebook:
    """Draws one fresh $\\lambda_j \\sim U(0, 1)$ per segment"""
    if codebook.num_codewords < 2:
        raise ValueError(
            "Dithering needs at least 2 codewords, got {}".format(codebook.num_codewords)
        )
    lambdas = rng.uniform(0.0, 1.0, size=codebook.num_codewords - 1)
    return DitheredCodebook.from_lambdas(codebook, lambdas)


def usage_stats(codebook: Codebook) -> UsageStats:
    r"""Usage probabilities, entropy and perplexity of the codebook counters

    $$
    p_k = \frac{n_k}{\sum_j n_j}, \quad
    H(\mathcal{C}) = -\sum_k p_k \log p_k, \quad
    \text{perplexity} = \exp(H(\mathcal{C}))
    $$
    """
    return UsageStats.from_counts(codebook.usage_counts)
