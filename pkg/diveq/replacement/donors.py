import catalogue
import numpy as np

donor_samplers = catalogue.create("diveq", "replacement")


@donor_samplers.register("IMPORTANCE")
def importance_donors(
    counts: np.ndarray,
    active: np.ndarray,
    rng: np.random.Generator,
    size: int,
) -> np.ndarray:
    r"""Donors drawn with probability $n_k / \sum_{j \in \text{active}} n_j$"""
    weights = counts[active]
    return rng.choice(active, size=size, replace=True, p=weights / weights.sum())


@donor_samplers.register("NSVQ_UNIFORM")
def uniform_donors(
    counts: np.ndarray,
    active: np.ndarray,
    rng: np.random.Generator,
    size: int,
) -> np.ndarray:
    return rng.choice(active, size=size, replace=True)
