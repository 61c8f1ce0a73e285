import numpy as np
from loguru import logger

from diveq.codebook import Codebook
from diveq.replacement.donors import donor_samplers
from diveq.replacement.policy import ReplacementPolicy
from diveq.utils.checks import TotalCollapseError

# Redraws of the perturbation when a replaced codeword lands on another one.
MAX_REDRAWS = 10


def should_replace(iteration: int, total_iterations: int, policy: ReplacementPolicy) -> bool:
    """Whether a replacement event happens at ``iteration``

    Events happen on multiples of the period of the current phase, never at
    iteration 0 and never in the last ``stop_margin`` iterations.
    """
    if iteration > total_iterations:
        raise ValueError(
            "Iteration {} is past the end of training ({})".format(iteration, total_iterations)
        )
    if iteration <= 0 or iteration > total_iterations - policy.stop_margin:
        return False
    return iteration % policy.period_at(iteration) == 0


def usage_shares(counts: np.ndarray) -> np.ndarray:
    grand_total = counts.sum()
    if grand_total == 0:
        return np.zeros(len(counts))
    return counts / grand_total


def perturbation_std(active_vectors: np.ndarray, scale: float) -> float:
    r"""$\mathrm{scale} \times$ mean nearest-neighbour distance of the active codewords

    With a single active codeword, or when every active codeword coincides,
    the RMS norm of the active codewords stands in for the distance, and
    ``scale`` itself when that norm is zero as well.
    """
    spread = 0.0
    if len(active_vectors) >= 2:
        squared = np.sum(
            (active_vectors[:, None, :] - active_vectors[None, :, :]) ** 2, axis=-1
        )
        np.fill_diagonal(squared, np.inf)
        spread = float(np.mean(np.sqrt(squared.min(axis=1))))
    if spread <= 0:
        spread = float(np.sqrt(np.mean(np.sum(active_vectors**2, axis=1))))
    if spread <= 0:
        return scale
    return scale * spread


def _collides(vectors: np.ndarray, row: int) -> bool:
    others = np.delete(vectors, row, axis=0)
    return bool(np.any(np.all(others == vectors[row], axis=1)))


def replace(
    codebook: Codebook,
    policy: ReplacementPolicy,
    rng: np.random.Generator,
) -> np.ndarray:
    r"""Overwrites the codewords used less than the discard threshold

    Each discarded codeword becomes $c_{\text{donor}} + \epsilon$ with
    $\epsilon \sim \mathcal{N}(0, s^2 I)$, $s$ given by
    [perturbation_std][diveq.replacement.replace.perturbation_std]. Donors are
    drawn among active codewords by the rule registered for ``policy.kind``.
    Usage counters are reset afterward.

    Returns
    -------
    np.ndarray
        Sorted indices of the replaced codewords, empty when none was.
    """
    counts = codebook.usage_counts.astype(np.float64)
    shares = usage_shares(counts)
    discarded = np.flatnonzero(shares < policy.discard_threshold)
    active = np.flatnonzero(shares >= policy.discard_threshold)
    if len(active) == 0:
        raise TotalCollapseError(codebook.num_codewords)
    if len(discarded) == 0:
        codebook.reset_usage()
        return discarded

    vectors = codebook.vectors.data
    std = perturbation_std(vectors[active], policy.perturbation_scale)
    donors = donor_samplers.get(policy.kind.value)(counts, active, rng, len(discarded))
    vectors[discarded] = vectors[donors] + rng.normal(0.0, std, size=(len(discarded), codebook.dim))
    for row, donor in zip(discarded, donors):
        redraws = 0
        while _collides(vectors, row):
            if redraws == MAX_REDRAWS:
                raise AssertionError("Replaced codeword {} duplicates another".format(row))
            vectors[row] = vectors[donor] + rng.normal(0.0, std, size=codebook.dim)
            redraws += 1

    if codebook.has_ema:
        codebook.ema_h[discarded] = codebook.ema_h[donors]
        codebook.ema_g[discarded] = vectors[discarded] * codebook.ema_h[discarded, None]
    codebook.reset_usage()
    logger.info(
        "Replaced {} of {} codewords ({} donors)",
        len(discarded),
        codebook.num_codewords,
        policy.kind.value,
    )
    return discarded
