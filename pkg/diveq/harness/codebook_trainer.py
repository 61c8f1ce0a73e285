from typing import Dict, List, Tuple, Union

import numpy as np

from diveq.autodiff import Tensor
from diveq.codebook import Codebook
from diveq.harness.base import BaseTrainer
from diveq.harness.evaluation import evaluate_codebook
from diveq.harness.schedules import TrainingSchedule
from diveq.io import SyntheticDataset
from diveq.metrics import MetricsRecord
from diveq.quantizers import QuantizerConfig
from diveq.replacement import ReplacementPolicy
from diveq.utils.checks import InsufficientDataError


class CodebookTrainer(BaseTrainer):
    r"""Learns a codebook directly on raw vectors

    The data play the role of the latents, $z = x$, and the quantized
    vectors are the reconstruction, $x_r = z_q$. Gradients reach the
    codebook through the estimator; the EMA estimator updates it with
    moving averages instead.

    Example
    ----------

    ```python
    from diveq.harness import CodebookTrainer, TrainingSchedule
    from diveq.quantizers import QuantizerConfig

    trainer = CodebookTrainer(
        QuantizerConfig(method="SF_DIVEQ"),
        num_codewords=32,
        schedule=TrainingSchedule(epochs=20, learning_rate=0.01, lr_milestones=[]),
    )
    trainer.fit(dataset)
    trainer.evaluation
    ```
    """

    def encode(self, x: np.ndarray) -> Tensor:
        return Tensor(x)

    def decode(self, z_q: Tensor) -> Tensor:
        return z_q

    def model_parameters(self) -> List[Tensor]:
        return []

    def fit_process(self, train: np.ndarray) -> None:
        if len(train) < self.num_codewords:
            raise InsufficientDataError("Direct training", len(train), self.num_codewords)
        self.init_codebooks(train)
        self.train(train)

    def evaluate(self, data: np.ndarray) -> Dict[str, float]:
        return evaluate_codebook(
            self.codebooks, data, space_filling=self.config.method.is_space_filling
        )


def train_codebook_direct(
    data: Union[SyntheticDataset, np.ndarray],
    config: QuantizerConfig,
    schedule: TrainingSchedule,
    policy: ReplacementPolicy = None,
    num_codewords: int = 8,
    num_stages: int = 1,
) -> Tuple[Union[Codebook, List[Codebook]], List[MetricsRecord]]:
    """Direct codebook training

    Returns
    -------
    Tuple[Union[Codebook, List[Codebook]], List[MetricsRecord]]
        The trained codebook, or the stage codebooks when ``num_stages > 1``,
        and the per-iteration metrics.
    """
    trainer = CodebookTrainer(
        config,
        num_codewords=num_codewords,
        schedule=schedule,
        policy=policy,
        num_stages=num_stages,
    ).fit(data)
    codebooks = trainer.codebook if num_stages == 1 else trainer.codebooks
    return codebooks, trainer.state.records
