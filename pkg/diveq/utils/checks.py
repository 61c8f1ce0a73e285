from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np


class DiveqError(Exception):
    """Base class of every error raised by the library"""


class ShapeError(DiveqError, ValueError):
    """Exception raised when the operands of a primitive do not conform"""

    def __init__(
        self,
        primitive: str,
        shapes: Sequence[Tuple[int, ...]],
        detail: str = "",
    ):
        self.primitive = primitive
        self.shapes = [tuple(shape) for shape in shapes]
        to_display = ", ".join(str(shape) for shape in self.shapes)
        message = f"Primitive '{primitive}' received incompatible shapes {to_display}"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)


class TapeUsageError(DiveqError, RuntimeError):
    """Exception raised when a tape is used out of order"""


class NonFiniteError(DiveqError, FloatingPointError):
    """Exception raised when an operation produces NaN or Inf values"""

    def __init__(
        self,
        where: str,
        coordinate: Tuple[int, ...] = None,
    ):
        self.where = where
        self.coordinate = coordinate
        if coordinate is None:
            message = f"Non-finite value produced by '{where}'"
        else:
            message = f"Non-finite value produced by '{where}' at coordinate {tuple(coordinate)}"
        super().__init__(message)


class NoiseResamplingError(DiveqError, RuntimeError):
    """Exception raised when a noise vector stays degenerate after every retry"""

    def __init__(self, estimator: str, retries: int):
        self.estimator = estimator
        self.retries = retries
        message = (
            f"The noise vector of {estimator} kept a norm below the guard "
            f"after {retries} resamplings"
        )
        super().__init__(message)


class CheckpointFormatError(DiveqError, ValueError):
    """Exception raised when a binary file cannot be parsed"""

    def __init__(self, path, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"Malformed file {path}: {reason}")


class TotalCollapseError(DiveqError, RuntimeError):
    """Exception raised when no codeword is active anymore"""

    def __init__(self, num_codewords: int):
        self.num_codewords = num_codewords
        message = (
            f"Total collapse: none of the {num_codewords} codewords is active, "
            "the codebook cannot be trained anymore"
        )
        super().__init__(message)


class TrainingDivergenceError(DiveqError, RuntimeError):
    """Exception raised when the loss stops being finite"""

    def __init__(self, iteration: int, last_good_iteration: int):
        self.iteration = iteration
        self.last_good_iteration = last_good_iteration
        message = (
            f"Training diverged at iteration {iteration}, "
            f"last good iteration is {last_good_iteration}"
        )
        super().__init__(message)


class StageError(DiveqError, RuntimeError):
    """Exception raised when one stage of a residual quantizer fails"""

    def __init__(self, stage_index: int, cause: Exception):
        self.stage_index = stage_index
        self.cause = cause
        super().__init__(
            f"Residual stage {stage_index} failed: {type(cause).__name__}: {cause}"
        )


class InsufficientDataError(DiveqError, ValueError):
    """Exception raised when fewer vectors than codewords are available"""

    def __init__(self, where: str, num_vectors: int, num_codewords: int, hint: str = ""):
        self.where = where
        self.num_vectors = num_vectors
        self.num_codewords = num_codewords
        message = (
            f"{where} needs at least K={num_codewords} vectors, got {num_vectors}"
        )
        if hint:
            message = f"{message}, {hint}"
        super().__init__(message)


@dataclass(frozen=True)
class Violation:
    path: str
    message: str
    severity: str = "error"

    def to_dict(self):
        return {"path": self.path, "message": self.message, "severity": self.severity}


class ConfigurationError(DiveqError, ValueError):
    """Exception raised when a configuration holds invalid values"""

    def __init__(self, violations: Iterable[Violation]):
        self.violations = list(violations)
        to_display = [
            f"- {violation.path}: {violation.message}" for violation in self.violations
        ]
        str_to_display = "\n".join(to_display)
        super().__init__(f"The configuration is invalid, namely:\n{str_to_display}")


def raise_on_errors(violations: List[Violation]) -> None:
    errors = [violation for violation in violations if violation.severity == "error"]
    if errors:
        raise ConfigurationError(errors)


def join_path(prefix: str, name: str) -> str:
    return f"{prefix}.{name}" if prefix else name


def is_real(value) -> bool:
    return isinstance(value, (int, float, np.integer, np.floating)) and not isinstance(value, bool)


def check_positive(value: float, path: str) -> List[Violation]:
    if not is_real(value) or not np.isfinite(value) or value <= 0:
        return [Violation(path, f"must be a finite positive number, got {value!r}")]
    return []


def check_probability(
    value: float, path: str, closed_low: bool = False
) -> List[Violation]:
    interval = "[0, 1)" if closed_low else "(0, 1)"
    if not is_real(value) or not np.isfinite(value):
        return [Violation(path, f"must lie in {interval}, got {value!r}")]
    low_ok = value >= 0 if closed_low else value > 0
    if not low_ok or value >= 1:
        return [Violation(path, f"must lie in {interval}, got {value!r}")]
    return []


def check_dimensions(
    primitive: str,
    left: np.ndarray,
    right: np.ndarray,
    left_axis: int = -1,
    right_axis: int = -1,
) -> None:
    """Raises a ``ShapeError`` unless both arrays have the same size along the given axes"""
    if np.ndim(left) == 0 or np.ndim(right) == 0:
        raise ShapeError(primitive, [np.shape(left), np.shape(right)], "expected arrays")
    if np.shape(left)[left_axis] != np.shape(right)[right_axis]:
        raise ShapeError(primitive, [np.shape(left), np.shape(right)])
