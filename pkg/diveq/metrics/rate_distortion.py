from numbers import Number
from typing import Iterable, Tuple, Union

import pandas as pd

from diveq.metrics.record import MetricsRecord

RunResult = Union[float, dict, MetricsRecord]

AVERAGED_COLUMNS = ["perplexity", "usage_fraction", "distortion_per_bit"]


def _as_row(bitrate: int, result: RunResult) -> dict:
    if isinstance(result, Number):
        return {"bitrate": bitrate, "distortion": float(result)}
    row = result.to_dict() if isinstance(result, MetricsRecord) else dict(result)
    row["bitrate"] = bitrate
    return row


def rate_distortion_table(runs: Iterable[Tuple[int, RunResult]]) -> pd.DataFrame:
    r"""Aggregates final metrics per bitrate

    Runs sharing a bitrate (several seeds) are averaged. The ``violation``
    column flags every bitrate whose mean distortion is larger than the one
    of the previous bitrate, since $D(R)$ should decrease strictly.

    Parameters
    ----------
    runs : Iterable[Tuple[int, RunResult]]
        Pairs of bitrate and final distortion, or final metrics holding a
        ``distortion`` entry.

    Example
    -------

    | bitrate | distortion | distortion_std | n_runs | violation |
    | ------: | ---------: | -------------: | -----: | :-------- |
    | 4       | 0.9        | 0.0            | 1      | False     |
    | 5       | 1.1        | 0.0            | 1      | True      |
    """
    frame = pd.DataFrame([_as_row(bitrate, result) for bitrate, result in runs])
    if frame.empty or frame.bitrate.nunique() < 2:
        raise ValueError("A rate-distortion table needs at least 2 distinct bitrates")

    grouped = frame.groupby("bitrate")
    table = grouped["distortion"].agg(["mean", "std", "count"])
    table.columns = ["distortion", "distortion_std", "n_runs"]
    table["distortion_std"] = table["distortion_std"].fillna(0.0)
    for column in AVERAGED_COLUMNS:
        if column in frame.columns:
            table[column] = grouped[column].mean()
    table = table.sort_index().reset_index()
    table["violation"] = table["distortion"].diff() > 0
    return table
