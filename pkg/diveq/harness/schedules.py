import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional

from diveq.harness.optimizers import optimizers
from diveq.quantizers import QuantizerConfig
from diveq.utils.checks import Violation, check_positive, join_path, raise_on_errors

CODEBOOK_INITS = ("data", "kmeans++", "point")


@dataclass
class TrainingSchedule:
    """Loop lengths, learning-rate milestones and initializations

    Parameters
    ----------
    epochs : int, optional
    batch_size : int, optional
    learning_rate : float, optional
        Initial learning rate, halved at every milestone.
    lr_milestones : List[int], optional
        Strictly increasing epochs, all below ``epochs``.
        **EXAMPLE**: `[40, 70]`
    iterations_per_epoch : int, optional
        Defaults to one pass over the training split.
    optimizer : str, optional
        Name in the ``optimizers`` registry.
        **EXAMPLE**: `"adam"`
    sf_warmup : int, optional
        Epochs without quantization before a space-filling estimator starts.
    sf_init_window : int, optional
        Trailing batches of latents averaged into the delayed codebook.
    codebook_init : str, optional
        One of ``"data"``, ``"kmeans++"`` or ``"point"``.
    seed : int, optional
        Seed of batching, initialization and replacement.
    """

    epochs: int = 100
    batch_size: int = 128
    learning_rate: float = 5.5e-4
    lr_milestones: List[int] = field(default_factory=lambda: [40, 70])
    iterations_per_epoch: Optional[int] = None
    optimizer: str = "adam"
    sf_warmup: int = 2
    sf_init_window: int = 30
    codebook_init: str = "data"
    seed: int = 0

    def __post_init__(self):
        self.lr_milestones = list(self.lr_milestones)
        self.optimizer = str(self.optimizer).lower()
        raise_on_errors(self.violations())

    def violations(self, prefix: str = "") -> List[Violation]:
        found = []
        for name in ("epochs", "batch_size", "sf_init_window"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                found.append(
                    Violation(join_path(prefix, name), f"must be an integer >= 1, got {value}")
                )
        if self.iterations_per_epoch is not None and (
            not isinstance(self.iterations_per_epoch, int) or self.iterations_per_epoch < 1
        ):
            found.append(
                Violation(
                    join_path(prefix, "iterations_per_epoch"),
                    f"must be an integer >= 1, got {self.iterations_per_epoch}",
                )
            )
        if not isinstance(self.sf_warmup, int) or self.sf_warmup < 0:
            found.append(
                Violation(join_path(prefix, "sf_warmup"), f"must be an integer >= 0, got {self.sf_warmup}")
            )
        found += check_positive(self.learning_rate, join_path(prefix, "learning_rate"))
        milestones = self.lr_milestones
        increasing = all(left < right for left, right in zip(milestones, milestones[1:]))
        in_range = all(0 < milestone < self.epochs for milestone in milestones)
        if not increasing or not in_range:
            found.append(
                Violation(
                    join_path(prefix, "lr_milestones"),
                    f"must be strictly increasing epochs in (0, {self.epochs}), got {milestones}",
                )
            )
        if self.optimizer not in optimizers.get_all():
            found.append(
                Violation(
                    join_path(prefix, "optimizer"),
                    f"unknown optimizer {self.optimizer}, options are {tuple(optimizers.get_all())}",
                )
            )
        if self.codebook_init not in CODEBOOK_INITS:
            found.append(
                Violation(
                    join_path(prefix, "codebook_init"),
                    f"unknown init {self.codebook_init}, options are {CODEBOOK_INITS}",
                )
            )
        return found

    def steps_per_epoch(self, num_samples: int) -> int:
        if self.iterations_per_epoch is not None:
            return self.iterations_per_epoch
        return math.ceil(num_samples / self.batch_size)

    def total_iterations(self, num_samples: int) -> int:
        return self.epochs * self.steps_per_epoch(num_samples)

    def to_dict(self):
        return asdict(self)


def learning_rate_at(epoch: int, schedule: TrainingSchedule) -> float:
    r"""$\mathrm{lr}_0 \cdot 0.5^{m}$ with $m$ the number of milestones $\leq$ ``epoch``"""
    passed = sum(1 for milestone in schedule.lr_milestones if milestone <= epoch)
    return schedule.learning_rate * 0.5**passed


def anneal_tau(epoch: int, config: QuantizerConfig) -> float:
    r"""Exponentially annealed Gumbel temperature

    $$
    \tau = \max\{\tau_{\text{start}} \, \eta^{\text{epoch}}, \tau_{\text{min}}\},
    \quad \eta = \left(\frac{\tau_{\text{min}}}{\tau_{\text{start}}}\right)^{1/N}
    $$

    with $N$ the ``tau_epochs`` of the configuration.
    """
    if epoch < 0:
        raise ValueError("Epoch must be non-negative, got {}".format(epoch))
    if epoch >= config.tau_epochs:
        return config.tau_min
    eta = (config.tau_min / config.tau_start) ** (1.0 / config.tau_epochs)
    return max(config.tau_start * eta**epoch, config.tau_min)
