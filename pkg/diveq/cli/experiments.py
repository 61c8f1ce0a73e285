from abc import ABCMeta, abstractmethod
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional

import catalogue
import numpy as np
import pandas as pd

from diveq.cli.config import ExperimentConfig, ExperimentKind
from diveq.harness import (
    AutoencoderTrainer,
    BaseTrainer,
    CodebookTrainer,
    TrainingSchedule,
    evaluate_codebook,
    fit_residual_codebooks,
)
from diveq.io import SyntheticDataset
from diveq.metrics import rate_distortion_table
from diveq.quantizers import Method, QuantizerConfig
from diveq.replacement import ReplacementPolicy

experiments = catalogue.create("diveq", "experiments")


@dataclass
class Member:
    """One training run of an experiment"""

    label: Dict[str, Any]
    quantizer: QuantizerConfig
    schedule: TrainingSchedule
    num_codewords: int
    policy: Optional[ReplacementPolicy] = None
    num_stages: int = 1
    harness: str = "direct"

    @property
    def name(self) -> str:
        return "_".join(f"{key}-{value}" for key, value in self.label.items())

    def trainer(self, config: ExperimentConfig) -> BaseTrainer:
        if self.harness == "autoencoder":
            return AutoencoderTrainer(
                self.quantizer,
                architecture=config.architecture,
                num_codewords=self.num_codewords,
                schedule=self.schedule,
                policy=self.policy,
                num_stages=self.num_stages,
            )
        return CodebookTrainer(
            self.quantizer,
            num_codewords=self.num_codewords,
            schedule=self.schedule,
            policy=self.policy,
            num_stages=self.num_stages,
        )


@dataclass
class MemberResult:
    member: Member
    trainer: BaseTrainer
    final: Dict[str, Any] = field(default_factory=dict)


def seeded_member(
    config: ExperimentConfig,
    label: Dict[str, Any],
    seed: int,
    method: Method = None,
    num_codewords: int = None,
    **overrides,
) -> Member:
    quantizer = replace(
        config.quantizer,
        method=method or config.quantizer.method,
        rng_seed=seed,
        **overrides.pop("quantizer", {}),
    )
    schedule = replace(config.schedule, seed=seed, **overrides.pop("schedule", {}))
    return Member(
        label={**label, "seed": seed},
        quantizer=quantizer,
        schedule=schedule,
        num_codewords=num_codewords or 2 ** config.bitrates[0],
        policy=overrides.pop("policy", config.replacement),
        num_stages=overrides.pop("num_stages", 1),
        harness=overrides.pop("harness", "direct"),
    )


class BaseExperiment(metaclass=ABCMeta):
    """Base class for experiments: a list of members and the tables summarizing them"""

    @abstractmethod
    def members(self, config: ExperimentConfig) -> List[Member]:
        """Training runs of the experiment, in output order"""

    def summarize(
        self,
        config: ExperimentConfig,
        dataset: SyntheticDataset,
        results: List[MemberResult],
    ) -> Dict[str, pd.DataFrame]:
        return {"final": pd.DataFrame([result.final for result in results])}


@experiments.register(ExperimentKind.CODEBOOK_DIRECT.value)
class CodebookDirect(BaseExperiment):
    harness = "direct"

    def members(self, config: ExperimentConfig) -> List[Member]:
        return [
            seeded_member(config, {"method": method.value}, seed, method=method, harness=self.harness)
            for method in config.methods
            for seed in config.seeds
        ]


@experiments.register(ExperimentKind.AUTOENCODER.value)
class AutoencoderExperiment(CodebookDirect):
    harness = "autoencoder"


@experiments.register(ExperimentKind.RD_SWEEP.value)
class RateDistortionSweep(BaseExperiment):
    def members(self, config: ExperimentConfig) -> List[Member]:
        return [
            seeded_member(
                config,
                {"method": method.value, "bitrate": bitrate},
                seed,
                method=method,
                num_codewords=2**bitrate,
            )
            for method in config.methods
            for bitrate in sorted(set(config.bitrates))
            for seed in config.seeds
        ]

    def summarize(self, config, dataset, results):
        tables = super().summarize(config, dataset, results)
        frames = []
        for method in config.methods:
            runs = [
                (result.member.label["bitrate"], result.final)
                for result in results
                if result.member.label["method"] == method.value
            ]
            table = rate_distortion_table(runs)
            table.insert(0, "method", method.value)
            frames.append(table)
        tables["rate_distortion"] = pd.concat(frames, ignore_index=True)
        return tables


def iterations_to_perplexity(metrics: pd.DataFrame, target: float) -> float:
    """First iteration whose batch perplexity reaches ``target``, ``NaN`` if none does"""
    reached = metrics.loc[metrics.perplexity >= target, "iteration"]
    return float(reached.iloc[0]) if len(reached) else np.nan


@experiments.register(ExperimentKind.REPLACEMENT_RACE.value)
class ReplacementRace(BaseExperiment):
    """Codebook replacement policies raced from a codebook collapsed on one point"""

    def members(self, config: ExperimentConfig) -> List[Member]:
        policy = config.replacement or ReplacementPolicy()
        return [
            seeded_member(
                config,
                {"replacement": kind.value},
                seed,
                policy=replace(policy, kind=kind),
                schedule={"codebook_init": "point"},
            )
            for kind in config.race_kinds
            for seed in config.seeds
        ]

    def summarize(self, config, dataset, results):
        tables = super().summarize(config, dataset, results)
        rows = []
        for result in results:
            target = config.race_threshold * result.member.num_codewords
            rows.append(
                {
                    **result.member.label,
                    "target_perplexity": target,
                    "iterations": iterations_to_perplexity(result.trainer.metrics, target),
                }
            )
        tables["race"] = pd.DataFrame(rows)
        return tables


@experiments.register(ExperimentKind.SIGMA_ABLATION.value)
class SigmaAblation(BaseExperiment):
    def members(self, config: ExperimentConfig) -> List[Member]:
        return [
            seeded_member(
                config,
                {"sigma2": sigma2},
                seed,
                quantizer={"sigma2": sigma2},
                harness=config.harness,
            )
            for sigma2 in config.sigma2_grid
            for seed in config.seeds
        ]

    def summarize(self, config, dataset, results):
        tables = super().summarize(config, dataset, results)
        final = tables["final"]
        table = final.groupby("sigma2")["distortion"].agg(["mean", "std", "count"])
        table.columns = ["distortion", "distortion_std", "n_runs"]
        tables["sigma_ablation"] = table.fillna(0.0).sort_index(ascending=False).reset_index()
        return tables


@experiments.register(ExperimentKind.RVQ_SWEEP.value)
class ResidualSweep(BaseExperiment):
    """Trained single-stage and residual quantizers, with Lloyd-fitted references"""

    def members(self, config: ExperimentConfig) -> List[Member]:
        return [
            seeded_member(config, {"stages": stages}, seed, num_stages=stages)
            for stages in (1, config.num_stages)
            for seed in config.seeds
        ]

    def summarize(self, config, dataset, results):
        tables = super().summarize(config, dataset, results)
        rows = []
        num_codewords = 2 ** config.bitrates[0]
        for seed in config.seeds:
            generator = np.random.default_rng(seed)
            codebooks = fit_residual_codebooks(
                dataset.train, num_codewords, config.num_stages, generator
            )
            for stages in (1, config.num_stages):
                scores = evaluate_codebook(codebooks[:stages], dataset.test)
                rows.append(
                    {"source": "lloyd", "stages": stages, "seed": seed, "distortion": scores["distortion"]}
                )
        for result in results:
            rows.append(
                {
                    "source": result.member.quantizer.method.value,
                    **result.member.label,
                    "distortion": result.final["distortion"],
                }
            )
        tables["rvq"] = pd.DataFrame(rows)
        return tables
