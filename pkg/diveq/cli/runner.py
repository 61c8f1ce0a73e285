from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Union

import numpy as np
import pandas as pd
from loguru import logger

from diveq import __version__
from diveq.cli.config import ExperimentConfig, load_config
from diveq.cli.experiments import Member, MemberResult, experiments
from diveq.codebook import load_checkpoint, save_checkpoint
from diveq.io import SyntheticDataset, generate, import_dataset
from diveq.metrics import export_alignment_snapshot, records_to_frame
from diveq.utils.file_management import write_json

# Latents written to each alignment snapshot.
SNAPSHOT_SAMPLES = 2000


def run_member(
    member: Member, dataset: SyntheticDataset, config: ExperimentConfig
) -> MemberResult:
    logger.info("Starting run {}", member.name)
    trainer = member.trainer(config).fit(dataset)
    final = {**member.label, **trainer.evaluation}
    final["iterations"] = trainer.state.iteration
    final["replacement_events"] = sum(
        1 for _, _, replaced in trainer.state.replacement_events if replaced
    )
    logger.info("Finished run {} with test distortion {}", member.name, final["distortion"])
    return MemberResult(member=member, trainer=trainer, final=final)


def _write_member_artifacts(result: MemberResult, dataset: SyntheticDataset, out: Path) -> None:
    trainer = result.trainer
    for stage, codebook in enumerate(trainer.codebooks):
        save_checkpoint(codebook, out / "checkpoints" / f"{result.member.name}_stage{stage}.bin")
    test = dataset.test[:SNAPSHOT_SAMPLES]
    latents = trainer.encode(test).data
    export_alignment_snapshot(trainer.codebook, latents, out / "snapshots" / f"{result.member.name}.bin")


def run(config: ExperimentConfig, workers: int = 1) -> Dict[str, pd.DataFrame]:
    """Runs every member of the experiment and writes its artifacts

    The output directory receives ``config.json``, ``provenance.json``,
    ``metrics.csv`` (one row per iteration and member), ``summary.json``, one
    CSV per summary table, codebook checkpoints and alignment snapshots.
    Members run in ``workers`` threads; outputs keep the member order.

    Returns
    -------
    Dict[str, pd.DataFrame]
        Summary tables by name.
    """
    out = Path(config.output_dir)
    experiment = experiments.get(config.experiment.value)()
    members = experiment.members(config)
    dataset = generate(config.dataset)
    write_json(config.to_dict(), out / "config.json")
    write_json(
        {
            "library": "diveq",
            "version": __version__,
            "numpy": np.__version__,
            "experiment": config.experiment.value,
            "seeds": list(config.seeds),
            "dataset_seed": config.dataset.seed,
            "members": [member.name for member in members],
        },
        out / "provenance.json",
    )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results: List[MemberResult] = list(
                executor.map(lambda member: run_member(member, dataset, config), members)
            )
    else:
        results = [run_member(member, dataset, config) for member in members]

    metrics = pd.concat(
        [records_to_frame(result.trainer.state.records, extra=result.member.label) for result in results],
        ignore_index=True,
    )
    metrics.to_csv(out / "metrics.csv", index=False)
    logger.info("Saved to {}", out / "metrics.csv")
    for result in results:
        _write_member_artifacts(result, dataset, out)

    tables = experiment.summarize(config, dataset, results)
    for name, table in tables.items():
        table.to_csv(out / f"{name}.csv", index=False)
    write_json(
        {
            "experiment": config.experiment.value,
            "tables": {name: table.to_dict(orient="records") for name, table in tables.items()},
        },
        out / "summary.json",
    )
    return tables


def run_file(
    config_path: Union[str, Path],
    output_dir: Union[str, Path] = None,
    seed_override: int = None,
    workers: int = 1,
) -> Dict[str, pd.DataFrame]:
    config = load_config(config_path)
    if seed_override is not None:
        config = config.with_seed(seed_override)
    if output_dir is not None:
        config = config.with_output_dir(output_dir)
    return run(config, workers=workers)


def export_snapshot(
    checkpoint_path: Union[str, Path],
    latents_path: Union[str, Path],
    out: Union[str, Path],
) -> Path:
    """Alignment snapshot of a saved codebook and a latent dataset file"""
    codebook = load_checkpoint(checkpoint_path)
    latents = import_dataset(latents_path) if latents_path is not None else np.empty((0, codebook.dim))
    return export_alignment_snapshot(codebook, latents, out)
