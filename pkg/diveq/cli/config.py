import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

from diveq.harness import AutoencoderArchitecture, TrainingSchedule
from diveq.io import DatasetSpec
from diveq.quantizers import Method, QuantizerConfig
from diveq.replacement import ReplacementKind, ReplacementPolicy
from diveq.utils.checks import ConfigurationError, Violation, join_path, raise_on_errors

HARNESSES = ("direct", "autoencoder")


class ExperimentKind(str, Enum):
    CODEBOOK_DIRECT = "CODEBOOK_DIRECT"
    AUTOENCODER = "AUTOENCODER"
    RD_SWEEP = "RD_SWEEP"
    REPLACEMENT_RACE = "REPLACEMENT_RACE"
    SIGMA_ABLATION = "SIGMA_ABLATION"
    RVQ_SWEEP = "RVQ_SWEEP"

    @classmethod
    def parse(cls, value) -> "ExperimentKind":
        if isinstance(value, cls):
            return value
        try:
            return cls[str(value).upper()]
        except KeyError:
            raise AttributeError(
                "Unknown experiment {}, options are {}".format(
                    value, tuple(kind.value for kind in cls)
                )
            ) from None


@dataclass
class ExperimentConfig:
    """Everything an experiment run depends on

    Parameters
    ----------
    experiment : ExperimentKind
        **EXAMPLE**: `"RD_SWEEP"`
    dataset : DatasetSpec
    quantizer : QuantizerConfig
        Estimator of single-method experiments, and template of the others.
    methods : List[Method], optional
        Estimators compared by CODEBOOK_DIRECT, AUTOENCODER and RD_SWEEP.
        Defaults to the method of ``quantizer``.
    schedule : TrainingSchedule
    replacement : ReplacementPolicy, optional
    bitrates : List[int]
        Codebook sizes $K = 2^B$.
    seeds : List[int]
        One run per seed, applied to the schedule and to the estimator noise.
    output_dir : str
    harness : str
        ``"direct"`` or ``"autoencoder"`` for SIGMA_ABLATION.
    architecture : AutoencoderArchitecture, optional
        Defaults to an encoder from the dataset dimension to ``latent_dim``.
    latent_dim : int
        Latent dimension of the default architecture.
    sigma2_grid : List[float]
        Variances compared by SIGMA_ABLATION.
    num_stages : int
        Stages of the residual quantizer compared with a single stage in
        RVQ_SWEEP.
    race_kinds : List[ReplacementKind]
        Policies raced by REPLACEMENT_RACE.
    race_threshold : float
        Share of K the perplexity must reach in the race.
    """

    experiment: ExperimentKind
    dataset: DatasetSpec
    quantizer: QuantizerConfig
    schedule: TrainingSchedule
    methods: Optional[List[Method]] = None
    replacement: Optional[ReplacementPolicy] = None
    bitrates: List[int] = field(default_factory=lambda: [3])
    seeds: List[int] = field(default_factory=lambda: [0])
    output_dir: str = "runs"
    harness: str = "direct"
    architecture: Optional[AutoencoderArchitecture] = None
    latent_dim: int = 2
    sigma2_grid: List[float] = field(default_factory=lambda: [1e-1, 1e-2, 1e-3, 1e-4])
    num_stages: int = 3
    race_kinds: List[ReplacementKind] = field(
        default_factory=lambda: [ReplacementKind.IMPORTANCE, ReplacementKind.NSVQ_UNIFORM]
    )
    race_threshold: float = 0.9

    def __post_init__(self):
        self.experiment = ExperimentKind.parse(self.experiment)
        self.methods = [Method.parse(method) for method in self.methods or [self.quantizer.method]]
        self.race_kinds = [ReplacementKind.parse(kind) for kind in self.race_kinds]
        self.harness = str(self.harness).lower()
        if self.architecture is None and self.uses_autoencoder:
            self.architecture = AutoencoderArchitecture(
                input_dim=self.dataset.dims, latent_dim=self.latent_dim
            )
        raise_on_errors(self.violations())

    @property
    def uses_autoencoder(self) -> bool:
        return self.experiment == ExperimentKind.AUTOENCODER or (
            self.experiment == ExperimentKind.SIGMA_ABLATION and self.harness == "autoencoder"
        )

    def violations(self, prefix: str = "") -> List[Violation]:
        found = []
        if not self.bitrates or any(
            not isinstance(bitrate, int) or bitrate < 1 for bitrate in self.bitrates
        ):
            found.append(
                Violation(join_path(prefix, "bitrates"), f"must be integers >= 1, got {self.bitrates}")
            )
        else:
            too_large = [bitrate for bitrate in self.bitrates if 2**bitrate > self.dataset.num_train]
            if too_large:
                found.append(
                    Violation(
                        join_path(prefix, "bitrates"),
                        f"2 ** bitrate must not exceed the {self.dataset.num_train} training "
                        f"vectors, got bitrates {too_large}",
                    )
                )
        if self.experiment == ExperimentKind.RD_SWEEP and len(set(self.bitrates)) < 2:
            found.append(
                Violation(join_path(prefix, "bitrates"), "a rate-distortion sweep needs 2 bitrates")
            )
        if not self.seeds or any(not isinstance(seed, int) for seed in self.seeds):
            found.append(
                Violation(join_path(prefix, "seeds"), f"must be a non-empty integer list, got {self.seeds}")
            )
        if self.harness not in HARNESSES:
            found.append(
                Violation(join_path(prefix, "harness"), f"must be one of {HARNESSES}, got {self.harness}")
            )
        if any(sigma2 is None or not sigma2 > 0 for sigma2 in self.sigma2_grid) or not self.sigma2_grid:
            found.append(
                Violation(join_path(prefix, "sigma2_grid"), f"must hold positive numbers, got {self.sigma2_grid}")
            )
        if not isinstance(self.num_stages, int) or self.num_stages < 2:
            found.append(
                Violation(join_path(prefix, "num_stages"), f"must be an integer >= 2, got {self.num_stages}")
            )
        if not 0 < self.race_threshold <= 1:
            found.append(
                Violation(join_path(prefix, "race_threshold"), f"must lie in (0, 1], got {self.race_threshold}")
            )
        if self.architecture is not None:
            if self.architecture.input_dim != self.dataset.dims:
                found.append(
                    Violation(
                        join_path(prefix, "architecture.input_dim"),
                        f"must equal dataset.dims={self.dataset.dims}, got {self.architecture.input_dim}",
                    )
                )
        if self.experiment == ExperimentKind.REPLACEMENT_RACE and any(
            method.is_space_filling for method in self.methods
        ):
            found.append(
                Violation(join_path(prefix, "quantizer.method"), "a replacement race needs a non space-filling estimator")
            )
        if self.replacement is not None and any(method.is_space_filling for method in self.methods):
            found.append(
                Violation(
                    join_path(prefix, "replacement"),
                    "space-filling estimators need no codebook replacement, the policy will be ignored",
                    severity="warning",
                )
            )
        return found

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seeds=[seed])

    def with_output_dir(self, output_dir: Union[str, Path]) -> "ExperimentConfig":
        return replace(self, output_dir=str(output_dir))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment.value,
            "dataset": self.dataset.to_dict(),
            "quantizer": self.quantizer.to_dict(),
            "methods": [method.value for method in self.methods],
            "schedule": self.schedule.to_dict(),
            "replacement": None if self.replacement is None else self.replacement.to_dict(),
            "bitrates": list(self.bitrates),
            "seeds": list(self.seeds),
            "output_dir": self.output_dir,
            "harness": self.harness,
            "architecture": None if self.architecture is None else self.architecture.to_dict(),
            "latent_dim": self.latent_dim,
            "sigma2_grid": list(self.sigma2_grid),
            "num_stages": self.num_stages,
            "race_kinds": [kind.value for kind in self.race_kinds],
            "race_threshold": self.race_threshold,
        }


SECTIONS: Dict[str, Callable] = {
    "dataset": DatasetSpec,
    "quantizer": QuantizerConfig,
    "schedule": TrainingSchedule,
    "replacement": ReplacementPolicy,
    "architecture": AutoencoderArchitecture,
}
OPTIONAL_SECTIONS = ("replacement", "architecture")
SCALARS = {
    "methods",
    "bitrates",
    "seeds",
    "output_dir",
    "harness",
    "latent_dim",
    "sigma2_grid",
    "num_stages",
    "race_kinds",
    "race_threshold",
}


def _build_section(name: str, raw: Any) -> Tuple[Any, List[Violation]]:
    if not isinstance(raw, dict):
        return None, [Violation(name, f"must be an object, got {type(raw).__name__}")]
    try:
        return SECTIONS[name](**raw), []
    except ConfigurationError as error:
        return None, [
            Violation(join_path(name, violation.path), violation.message, violation.severity)
            for violation in error.violations
        ]
    except TypeError as error:
        return None, [Violation(name, str(error))]
    except AttributeError as error:
        return None, [Violation(name, str(error))]


def build_config(raw: Dict[str, Any]) -> Tuple[Optional[ExperimentConfig], List[Violation]]:
    """Builds the configuration and collects every violation with its dotted path

    Never raises on invalid content: the returned configuration is ``None``
    whenever an error was found.
    """
    if not isinstance(raw, dict):
        return None, [Violation("", "the configuration must be a JSON object")]
    found = []
    known = {"experiment", *SECTIONS, *SCALARS}
    for key in raw:
        if key not in known:
            found.append(Violation(key, "unknown field"))
    try:
        ExperimentKind.parse(raw.get("experiment"))
    except AttributeError as error:
        found.append(Violation("experiment", str(error)))

    sections = {}
    for name in SECTIONS:
        if raw.get(name) is None:
            if name not in OPTIONAL_SECTIONS:
                sections[name], errors = _build_section(name, {})
                found += errors
            continue
        sections[name], errors = _build_section(name, raw[name])
        found += errors

    if any(violation.severity == "error" for violation in found):
        return None, found
    scalars = {key: raw[key] for key in SCALARS if key in raw}
    try:
        config = ExperimentConfig(experiment=raw["experiment"], **sections, **scalars)
    except ConfigurationError as error:
        return None, found + error.violations
    except (TypeError, AttributeError) as error:
        return None, found + [Violation("", str(error))]
    return config, found + [
        violation for violation in config.violations() if violation.severity != "error"
    ]


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError("There is no file found in {}".format(path))
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as error:
        raise ConfigurationError(
            [Violation("", f"invalid JSON at line {error.lineno}: {error.msg}")]
        ) from error


def validate(path: Union[str, Path]) -> List[Violation]:
    """Full validation report of a configuration file, warnings included"""
    _, violations = build_config(read_config_file(path))
    return violations


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Reads and validates a configuration file

    Raises
    ------
    ConfigurationError
        With every error-severity violation found.
    """
    config, violations = build_config(read_config_file(path))
    raise_on_errors(violations)
    return config
