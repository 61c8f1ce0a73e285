from diveq.cli.config import (
    ExperimentConfig,
    ExperimentKind,
    build_config,
    load_config,
    validate,
)
from diveq.cli.experiments import BaseExperiment, experiments
from diveq.cli.main import main
from diveq.cli.runner import export_snapshot, run, run_file
