from abc import ABCMeta, abstractmethod
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
import tqdm
from loguru import logger

from diveq import CACHE_DIR
from diveq.autodiff import Tape, Tensor, add, backward
from diveq.codebook import Codebook, nearest, usage_stats
from diveq.harness.initialization import init_codebook_vectors, sf_delayed_init
from diveq.harness.optimizers import Optimizer, optimizers
from diveq.harness.schedules import TrainingSchedule, anneal_tau, learning_rate_at
from diveq.io import SyntheticDataset
from diveq.losses import LossBreakdown, compute_loss, loss_noise_family, reconstruction_error
from diveq.metrics import MetricsRecord, distortion_per_bit, records_to_frame
from diveq.quantizers import (
    Method,
    QuantizationResult,
    QuantizerConfig,
    ResidualStageResult,
    ema_update,
    quantize,
    quantize_residual,
)
from diveq.replacement import ReplacementPolicy, replace, should_replace
from diveq.utils.checks import NonFiniteError, TrainingDivergenceError
from diveq.utils.file_management import delete_object, load_object, save_object

Quantization = Union[QuantizationResult, ResidualStageResult]


@dataclass
class TrainerState:
    """Everything a training run mutates

    The three generators are spawned from the schedule seed and the
    quantizer seed, so identical configurations replay identical streams.
    """

    batch_rng: np.random.Generator
    noise_rng: np.random.Generator
    replacement_rng: np.random.Generator
    init_rng: np.random.Generator
    latent_buffer: Deque[np.ndarray]
    iteration: int = 0
    epoch: int = 0
    last_good_iteration: int = 0
    optimizer: Optional[Optimizer] = None
    pending_delayed_init: bool = False
    records: List[MetricsRecord] = field(default_factory=list)
    replacement_events: List[Tuple[int, int, List[int]]] = field(default_factory=list)

    @classmethod
    def from_seeds(cls, seed: int, rng_seed: int, window: int) -> "TrainerState":
        batch, noise, replacement, init = np.random.SeedSequence([seed, rng_seed]).spawn(4)
        return cls(
            batch_rng=np.random.default_rng(batch),
            noise_rng=np.random.default_rng(noise),
            replacement_rng=np.random.default_rng(replacement),
            init_rng=np.random.default_rng(init),
            latent_buffer=deque(maxlen=window),
        )


def batch_rows(generator: np.random.Generator, num_samples: int, batch_size: int, steps: int):
    size = min(batch_size, num_samples)
    order = generator.permutation(num_samples)
    cursor = 0
    for _ in range(steps):
        if cursor + size > num_samples:
            order = generator.permutation(num_samples)
            cursor = 0
        yield order[cursor : cursor + size]
        cursor += size


class BaseTrainer(metaclass=ABCMeta):
    """Base class for trainers of quantization bottlenecks

    Parameters
    ----------
    config : QuantizerConfig
        Estimator and its hyperparameters.
    num_codewords : int
        K of every codebook.
    schedule : TrainingSchedule, optional
    policy : ReplacementPolicy, optional
        Codebook replacement, never applied to space-filling estimators.
    num_stages : int, optional
        Stages of residual quantization.
    progress : bool, optional
        Show a progress bar over epochs.

    Attributes
    ----------
    codebooks: List[Codebook]
        Available with the [``fit()``][diveq.harness.base.BaseTrainer.fit] method
    metrics: pd.DataFrame
        Available with the [``fit()``][diveq.harness.base.BaseTrainer.fit] method

        One row per iteration with the columns of ``METRICS_COLUMNS``.
    evaluation: Dict[str, float]
        Hard-VQ scores on the test split, when one was given to ``fit``.
    """

    def __init__(
        self,
        config: QuantizerConfig,
        num_codewords: int,
        schedule: TrainingSchedule = None,
        policy: ReplacementPolicy = None,
        num_stages: int = 1,
        progress: bool = False,
    ):
        self.config = config
        self.num_codewords = num_codewords
        self.schedule = schedule or TrainingSchedule()
        self.policy = policy
        self.num_stages = num_stages
        self.progress = progress
        self.codebooks: List[Codebook] = []
        if num_codewords < 1 or num_stages < 1:
            raise ValueError(
                "K and the number of stages must be positive, got {} and {}".format(
                    num_codewords, num_stages
                )
            )
        if config.method.is_space_filling and num_stages > 1:
            raise ValueError("Space-filling estimators are trained with a single stage")
        if config.method.is_space_filling and policy is not None:
            logger.warning(
                "{} needs no codebook replacement, the policy is ignored",
                config.method.value,
            )
            self.policy = None

    @property
    def codebook(self) -> Codebook:
        return self.codebooks[0]

    @abstractmethod
    def encode(self, x: np.ndarray) -> Tensor:
        """Latents of a batch"""

    @abstractmethod
    def decode(self, z_q: Tensor) -> Tensor:
        """Reconstruction of a batch from its quantized latents"""

    @abstractmethod
    def model_parameters(self) -> List[Tensor]:
        """Trainable tensors besides the codebooks"""

    @abstractmethod
    def fit_process(self, train: np.ndarray) -> None:
        """Builds the model and codebooks, then runs the training loop"""

    @abstractmethod
    def evaluate(self, data: np.ndarray) -> Dict[str, float]:
        """Hard-VQ scores on held-out data"""

    def fit(
        self,
        data: Union[SyntheticDataset, np.ndarray],
        test_data: np.ndarray = None,
    ) -> "BaseTrainer":
        """Trains the quantizer

        Parameters
        ----------
        data : Union[SyntheticDataset, np.ndarray]
            A dataset, whose split is used, or the training vectors.
        test_data : np.ndarray, optional
            Held-out vectors when ``data`` is an array.

        Examples
        --------
        ```python
        from diveq.harness import CodebookTrainer, TrainingSchedule
        from diveq.io import DatasetSpec
        from diveq.quantizers import QuantizerConfig

        dataset = DatasetSpec(kind="GAUSSIAN_MIXTURE").generate()
        trainer = CodebookTrainer(QuantizerConfig(method="DIVEQ"), num_codewords=8)
        trainer.fit(dataset)
        trainer.metrics.tail()
        ```
        """
        if isinstance(data, SyntheticDataset):
            train, test_data = data.train, data.test
        else:
            train = np.asarray(data, dtype=np.float64)
        self.state = TrainerState.from_seeds(
            self.schedule.seed, self.config.rng_seed, self.schedule.sf_init_window
        )
        logger.info(
            "Training {} with K={} over {} epochs",
            self.config.method.value,
            self.num_codewords,
            self.schedule.epochs,
        )
        self.fit_process(train)
        self.metrics = records_to_frame(self.state.records)
        if test_data is not None and len(test_data) > 0:
            self.evaluation = self.evaluate(np.asarray(test_data, dtype=np.float64))
            logger.info("Test distortion: {}", self.evaluation["distortion"])
        return self

    def is_fitted(self) -> None:
        """Raises an error if the trainer has not been fitted properly"""
        if not hasattr(self, "metrics") or not isinstance(self.metrics, pd.DataFrame):
            raise Exception(
                "Trainer has not been fitted, please use the fit method as follow: Trainer.fit()"
            )

    def init_codebooks(self, latents: np.ndarray) -> None:
        """Stage codebooks initialized on ``latents`` and their successive residuals"""
        residuals = latents
        self.codebooks = []
        for _ in range(self.num_stages):
            vectors = init_codebook_vectors(
                residuals, self.num_codewords, self.schedule.codebook_init, self.state.init_rng
            )
            self.codebooks.append(Codebook(vectors, ema=self.config.method is Method.EMA))
            indices, _ = nearest(residuals, vectors)
            residuals = residuals - vectors[indices]
        self.state.pending_delayed_init = (
            self.config.method.is_space_filling and self.schedule.sf_warmup > 0
        )

    def _trainable(self) -> List[Tensor]:
        parameters = self.model_parameters()
        if self.config.method not in (Method.EMA, Method.HARD):
            parameters += [codebook.vectors for codebook in self.codebooks]
        return parameters

    def train(self, train: np.ndarray) -> None:
        schedule, state = self.schedule, self.state
        steps = schedule.steps_per_epoch(len(train))
        total_iterations = schedule.epochs * steps
        state.optimizer = optimizers.get(schedule.optimizer)(
            self._trainable(), schedule.learning_rate
        )
        for epoch in tqdm.tqdm(range(schedule.epochs), disable=not self.progress):
            state.epoch = epoch
            lr = learning_rate_at(epoch, schedule)
            state.optimizer.learning_rate = lr
            tau = anneal_tau(epoch, self.config) if self.config.method is Method.STGS else np.nan
            warmup = state.pending_delayed_init and epoch < schedule.sf_warmup
            if state.pending_delayed_init and not warmup:
                self._delayed_init()
            for rows in batch_rows(state.batch_rng, len(train), schedule.batch_size, steps):
                state.iteration += 1
                try:
                    record = self._step(train[rows], lr, tau, warmup, total_iterations)
                except NonFiniteError as error:
                    raise TrainingDivergenceError(
                        state.iteration, state.last_good_iteration
                    ) from error
                state.records.append(record)
                state.last_good_iteration = state.iteration
                logger.debug("{}", record)

    def _delayed_init(self) -> None:
        codebook = sf_delayed_init(
            list(self.state.latent_buffer), self.num_codewords, self.state.init_rng
        )
        self.codebooks[0].vectors.data[...] = codebook.vectors.data
        self.codebooks[0].reset_usage()
        self.state.optimizer.reset_state(self.codebooks[0].vectors)
        self.state.latent_buffer.clear()
        self.state.pending_delayed_init = False

    def _quantize(self, z: Tensor, tau: float) -> Quantization:
        if self.num_stages == 1:
            return quantize(z, self.codebooks[0], self.config, rng=self.state.noise_rng, tau=tau)
        return quantize_residual(z, self.codebooks, self.config, rng=self.state.noise_rng, tau=tau)

    def _loss(self, x, x_r: Tensor, z: Tensor, quantization: Quantization) -> LossBreakdown:
        if isinstance(quantization, QuantizationResult):
            return compute_loss(x, x_r, z, quantization, self.config)
        reconstruction = reconstruction_error(x, x_r)
        stage_inputs = [z, *quantization.residuals[:-1]]
        stages = [
            compute_loss(stage_input, result.z_q, stage_input, result, self.config)
            for stage_input, result in zip(stage_inputs, quantization.stage_results)
        ]
        codebook_term, commitment_term, kl_term = (
            _sum([getattr(stage, name) for stage in stages])
            for name in ("codebook_term", "commitment_term", "kl_term")
        )
        return LossBreakdown(
            reconstruction=reconstruction,
            codebook_term=codebook_term,
            commitment_term=commitment_term,
            kl_term=kl_term,
            total=add(add(add(reconstruction, codebook_term), commitment_term), kl_term),
        )

    def _step(
        self, x: np.ndarray, lr: float, tau: float, warmup: bool, total_iterations: int
    ) -> MetricsRecord:
        state = self.state
        quantization = None
        with Tape() as tape:
            z = self.encode(x)
            if warmup:
                state.latent_buffer.append(z.data.copy())
                breakdown = loss_noise_family(x, self.decode(z))
            else:
                quantization = self._quantize(z, tau)
                breakdown = self._loss(x, self.decode(quantization.z_q), z, quantization)
        if len(tape) > 0:
            state.optimizer.step(backward(tape, breakdown.total))
        for parameter in state.optimizer.parameters:
            if not np.all(np.isfinite(parameter.data)):
                raise NonFiniteError("optimizer step")

        values = breakdown.values()
        if quantization is None:
            return MetricsRecord(
                iteration=state.iteration,
                epoch=state.epoch,
                distortion=np.nan,
                perplexity=np.nan,
                usage_fraction=np.nan,
                distortion_per_bit=np.nan,
                lr=lr,
                tau=tau,
                **values,
            )

        stage_results = (
            [quantization]
            if isinstance(quantization, QuantizationResult)
            else quantization.stage_results
        )
        stage_inputs = (
            [z.data]
            if isinstance(quantization, QuantizationResult)
            else [z.data, *(residual.data for residual in quantization.residuals[:-1])]
        )
        for codebook, stage_input, result in zip(self.codebooks, stage_inputs, stage_results):
            if self.config.method is Method.EMA:
                ema_update(codebook, stage_input, result.indices, self.config.gamma)
            codebook.record_usage(result.usage_indices)
        # Counters accumulate since the last replacement event
        usage = usage_stats(self.codebooks[0])

        replaced_count = 0
        if self.policy is not None and should_replace(
            state.iteration, total_iterations, self.policy
        ):
            for stage, codebook in enumerate(self.codebooks):
                replaced = replace(codebook, self.policy, state.replacement_rng)
                if len(replaced):
                    state.optimizer.reset_state(codebook.vectors, replaced)
                state.replacement_events.append((state.iteration, stage, replaced.tolist()))
                replaced_count += len(replaced)

        return MetricsRecord(
            iteration=state.iteration,
            epoch=state.epoch,
            distortion=quantization.distortion,
            perplexity=usage.perplexity,
            usage_fraction=usage.usage_fraction,
            distortion_per_bit=distortion_per_bit(quantization.distortion, usage, warn=False),
            lr=lr,
            tau=tau,
            replaced_count=replaced_count,
            **values,
        )

    def load(self, path=None) -> None:
        """Loads a trainer saved with ``save``

        Parameters
        ----------
        path : str, optional
            **EXAMPLE**: `"my_folder/direct_diveq.pickle"`
        """
        path = path or self._get_path()
        loaded_trainer = load_object(path)
        self.__dict__ = loaded_trainer.__dict__.copy()
        self.path = path

    def save(self, path: str = None, name: str = None) -> None:
        """Saves the fitted trainer with its codebooks, model and metrics

        Parameters
        ----------
        path : str, optional
            **EXAMPLE**: `"my_folder/direct_diveq.pickle"`
        name : str, optional
            **EXAMPLE**: `"direct_diveq"`
        """
        self.is_fitted()
        if name:
            self.name = name
        if not path:
            path = self._get_path()
        self.path = path
        save_object(self, path)

    def delete(self, path: str = None) -> None:
        if not path:
            path = self.path
        delete_object(self, path)

    def _get_path(self):
        base_path = CACHE_DIR / "trainers"
        if hasattr(self, "name"):
            filename = f"{self.name.lower()}.pickle"
        else:
            filename = f"{type(self).__name__.lower()}.pickle"
        return base_path / filename


def _sum(terms: List[Tensor]) -> Tensor:
    result = terms[0]
    for term in terms[1:]:
        result = add(result, term)
    return result
