from dataclasses import asdict, dataclass
from enum import Enum
from typing import List

from diveq.utils.checks import (
    Violation,
    check_positive,
    check_probability,
    is_real,
    join_path,
    raise_on_errors,
)


class Method(str, Enum):
    HARD = "HARD"
    STE = "STE"
    EMA = "EMA"
    RT = "RT"
    STGS = "STGS"
    NSVQ = "NSVQ"
    DIVEQ = "DIVEQ"
    SF_DIVEQ = "SF_DIVEQ"
    DIVEQ_DETACH = "DIVEQ_DETACH"
    SF_DIVEQ_DETACH = "SF_DIVEQ_DETACH"

    @classmethod
    def parse(cls, value) -> "Method":
        if isinstance(value, cls):
            return value
        try:
            return cls[str(value).upper()]
        except KeyError:
            raise AttributeError(
                "Unknown method {}, options are {}".format(
                    value, tuple(method.value for method in cls)
                )
            ) from None

    @property
    def family(self) -> str:
        """Loss family: ``"ste"``, ``"gumbel"`` or ``"noise"``"""
        if self in (Method.HARD, Method.STE, Method.EMA, Method.RT):
            return "ste"
        if self is Method.STGS:
            return "gumbel"
        return "noise"

    @property
    def is_space_filling(self) -> bool:
        return self in (Method.SF_DIVEQ, Method.SF_DIVEQ_DETACH)

    @property
    def uses_sigma2(self) -> bool:
        return self in (Method.DIVEQ, Method.SF_DIVEQ)

    @property
    def is_differentiable(self) -> bool:
        return self is not Method.HARD


@dataclass
class QuantizerConfig:
    r"""Estimator selection and its hyperparameters

    Parameters
    ----------
    method : Method
        **EXAMPLE**: `"DIVEQ"`
    sigma2 : float, optional
        Variance $\sigma^2$ of the directional noise of DiVeQ and SF-DiVeQ.
    alpha : float, optional
        Codebook-loss weight $\alpha$.
    beta : float, optional
        Commitment-loss weight $\beta$.
    gamma : float, optional
        EMA decay $\gamma$.
    phi : float, optional
        KL weight $\phi$ of the Gumbel-Softmax loss.
    tau_start, tau_min : float, optional
        Bounds of the Gumbel temperature schedule.
    tau_epochs : int, optional
        Epoch at which the temperature reaches ``tau_min``.
    rng_seed : int, optional
        Seed of the estimator noise.
    """

    method: Method = Method.DIVEQ
    sigma2: float = 1e-3
    alpha: float = 1.0
    beta: float = 0.25
    gamma: float = 0.99
    phi: float = 1.0
    tau_start: float = 1.0
    tau_min: float = 0.1
    tau_epochs: int = 100
    rng_seed: int = 0

    def __post_init__(self):
        self.method = Method.parse(self.method)
        raise_on_errors(self.violations())

    def violations(self, prefix: str = "") -> List[Violation]:
        found = []
        if self.method.uses_sigma2:
            found += check_positive(self.sigma2, join_path(prefix, "sigma2"))
        found += check_probability(self.gamma, join_path(prefix, "gamma"))
        for name in ("alpha", "beta", "phi"):
            value = getattr(self, name)
            if not is_real(value) or value < 0:
                found.append(
                    Violation(join_path(prefix, name), f"must be non-negative, got {value}")
                )
        found += check_positive(self.tau_min, join_path(prefix, "tau_min"))
        if not (is_real(self.tau_start) and is_real(self.tau_min)) or self.tau_start < self.tau_min:
            found.append(
                Violation(
                    join_path(prefix, "tau_start"),
                    f"must be at least tau_min={self.tau_min}, got {self.tau_start}",
                )
            )
        if not isinstance(self.tau_epochs, int) or self.tau_epochs < 1:
            found.append(
                Violation(
                    join_path(prefix, "tau_epochs"),
                    f"must be a positive integer, got {self.tau_epochs}",
                )
            )
        return found

    def to_dict(self):
        params = asdict(self)
        params["method"] = self.method.value
        return params
