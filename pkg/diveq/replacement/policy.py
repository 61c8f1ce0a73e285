from dataclasses import asdict, dataclass
from enum import Enum
from typing import List

from diveq.utils.checks import Violation, check_positive, check_probability, join_path, raise_on_errors


class ReplacementKind(str, Enum):
    NSVQ_UNIFORM = "NSVQ_UNIFORM"
    IMPORTANCE = "IMPORTANCE"

    @classmethod
    def parse(cls, value) -> "ReplacementKind":
        if isinstance(value, cls):
            return value
        try:
            return cls[str(value).upper()]
        except KeyError:
            raise AttributeError(
                "Unknown replacement kind {}, options are {}".format(
                    value, tuple(kind.value for kind in cls)
                )
            ) from None


@dataclass
class ReplacementPolicy:
    """Rule and schedule of codebook replacement

    Codewords whose share of the assignments since the last event falls
    below ``discard_threshold`` are overwritten by a perturbed copy of an
    active codeword.

    Parameters
    ----------
    kind : ReplacementKind
        Donor sampling rule.
        **EXAMPLE**: `"IMPORTANCE"`
    discard_threshold : float, optional
        Usage share under which a codeword is replaced.
    phase1_end : int, optional
        Last iteration of the first phase.
    phase1_period, phase2_period : int, optional
        Iterations between two events in each phase.
    stop_margin : int, optional
        No event happens in the last ``stop_margin`` iterations.
    perturbation_scale : float, optional
        Noise scale relative to the mean nearest-neighbour distance of the
        active codewords.
    """

    kind: ReplacementKind = ReplacementKind.IMPORTANCE
    discard_threshold: float = 0.01
    phase1_end: int = 2000
    phase1_period: int = 100
    phase2_period: int = 500
    stop_margin: int = 1000
    perturbation_scale: float = 0.1

    def __post_init__(self):
        self.kind = ReplacementKind.parse(self.kind)
        raise_on_errors(self.violations())

    def violations(self, prefix: str = "") -> List[Violation]:
        found = check_probability(
            self.discard_threshold, join_path(prefix, "discard_threshold")
        )
        for name in ("phase1_period", "phase2_period"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                found.append(
                    Violation(join_path(prefix, name), f"must be an integer >= 1, got {value}")
                )
        for name in ("phase1_end", "stop_margin"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                found.append(
                    Violation(join_path(prefix, name), f"must be an integer >= 0, got {value}")
                )
        found += check_positive(
            self.perturbation_scale, join_path(prefix, "perturbation_scale")
        )
        return found

    def period_at(self, iteration: int) -> int:
        return self.phase1_period if iteration <= self.phase1_end else self.phase2_period

    def to_dict(self):
        params = asdict(self)
        params["kind"] = self.kind.value
        return params
