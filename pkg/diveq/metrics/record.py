from dataclasses import asdict, dataclass, fields
from typing import Dict, Iterable, Optional

import numpy as np
import pandas as pd

METRICS_COLUMNS = [
    "iteration",
    "epoch",
    "total_loss",
    "recon",
    "codebook_term",
    "commitment_term",
    "kl_term",
    "distortion",
    "perplexity",
    "usage_fraction",
    "distortion_per_bit",
    "lr",
    "tau",
    "replaced_count",
]


@dataclass
class MetricsRecord:
    """One row of the metrics stream

    ``tau`` is ``NaN`` outside Gumbel-Softmax runs. ``replaced_count`` is the
    number of codewords overwritten by the replacement event of this
    iteration.
    """

    iteration: int
    epoch: int
    total_loss: float
    recon: float
    codebook_term: float
    commitment_term: float
    kl_term: float
    distortion: float
    perplexity: float
    usage_fraction: float
    distortion_per_bit: float
    lr: float
    tau: float = np.nan
    replaced_count: int = 0

    def __post_init__(self):
        if self.distortion < 0:
            raise ValueError("Distortion must be non-negative, got {}".format(self.distortion))
        if self.perplexity < 1:
            raise ValueError("Perplexity must be at least 1, got {}".format(self.perplexity))

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, row: Dict) -> "MetricsRecord":
        names = {field.name for field in fields(cls)}
        return cls(**{key: value for key, value in row.items() if key in names})


def records_to_frame(
    records: Iterable[MetricsRecord], extra: Optional[Dict] = None
) -> pd.DataFrame:
    """Metrics stream as a DataFrame with the columns of ``METRICS_COLUMNS``

    ``extra`` adds constant leading columns, such as the run label of a
    sweep member.
    """
    frame = pd.DataFrame([record.to_dict() for record in records], columns=METRICS_COLUMNS)
    for position, (name, value) in enumerate((extra or {}).items()):
        frame.insert(position, name, value)
    return frame
