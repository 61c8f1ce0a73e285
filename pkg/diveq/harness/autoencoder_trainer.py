from typing import Dict, List, Tuple, Union

import numpy as np

from diveq.autodiff import Tensor
from diveq.codebook import Codebook
from diveq.harness.autoencoder import Autoencoder, AutoencoderArchitecture
from diveq.harness.base import BaseTrainer
from diveq.harness.evaluation import evaluate_autoencoder
from diveq.harness.schedules import TrainingSchedule
from diveq.io import SyntheticDataset
from diveq.metrics import MetricsRecord
from diveq.quantizers import QuantizerConfig
from diveq.replacement import ReplacementPolicy
from diveq.utils.checks import ShapeError

# Samples encoded to initialize the codebook.
INIT_SAMPLES = 4096


class AutoencoderTrainer(BaseTrainer):
    r"""Trains an MLP autoencoder with a quantization bottleneck

    $$
    z = E(x), \quad z_q = Q(z), \quad x_r = D(z_q)
    $$

    Encoder, decoder and codebook are updated together from the loss of the
    estimator family. Space-filling estimators first train the
    autoencoder without quantization for ``sf_warmup`` epochs.

    Parameters
    ----------
    architecture : AutoencoderArchitecture
        Its ``latent_dim`` is the codebook D.
    """

    def __init__(
        self,
        config: QuantizerConfig,
        architecture: AutoencoderArchitecture,
        num_codewords: int,
        schedule: TrainingSchedule = None,
        policy: ReplacementPolicy = None,
        num_stages: int = 1,
        progress: bool = False,
    ):
        super().__init__(
            config,
            num_codewords=num_codewords,
            schedule=schedule,
            policy=policy,
            num_stages=num_stages,
            progress=progress,
        )
        self.architecture = architecture

    def encode(self, x: np.ndarray) -> Tensor:
        return self.model.encode(x)

    def decode(self, z_q: Tensor) -> Tensor:
        return self.model.decode(z_q)

    def model_parameters(self) -> List[Tensor]:
        return self.model.parameters()

    def fit_process(self, train: np.ndarray) -> None:
        if train.ndim != 2 or train.shape[1] != self.architecture.input_dim:
            raise ShapeError(
                "autoencoder",
                [train.shape],
                f"expected N x {self.architecture.input_dim} training data",
            )
        self.model = Autoencoder(self.architecture, seed=self.schedule.seed)
        rows = self.state.init_rng.permutation(len(train))[:INIT_SAMPLES]
        self.init_codebooks(self.model.encode(train[rows]).data)
        self.train(train)

    def evaluate(self, data: np.ndarray) -> Dict[str, float]:
        return evaluate_autoencoder(self.model, self.codebooks, data)


def train_autoencoder(
    dataset: Union[SyntheticDataset, np.ndarray],
    architecture: AutoencoderArchitecture,
    config: QuantizerConfig,
    schedule: TrainingSchedule,
    policy: ReplacementPolicy = None,
    num_codewords: int = 8,
) -> Tuple[Autoencoder, Codebook, List[MetricsRecord]]:
    """Autoencoder training

    Returns
    -------
    Tuple[Autoencoder, Codebook, List[MetricsRecord]]
        The trained model, its codebook and the per-iteration metrics.
    """
    trainer = AutoencoderTrainer(
        config,
        architecture=architecture,
        num_codewords=num_codewords,
        schedule=schedule,
        policy=policy,
    ).fit(dataset)
    return trainer.model, trainer.codebook, trainer.state.records
