from pathlib import Path
from typing import Union

import numpy as np

from diveq.autodiff import Tensor
from diveq.utils.binary import F64, BinaryReader, pack_array, pack_header
from diveq.utils.checks import CheckpointFormatError, ShapeError
from diveq.utils.file_management import read_binary, write_binary

DATASET_MAGIC = b"DIVEQDS1"


def pack_dataset(data: np.ndarray) -> bytes:
    """Magic ``DIVEQDS1``, N and D as little-endian u64, then N*D f64 row-major"""
    if data.ndim != 2:
        raise ShapeError("export_dataset", [data.shape], "expected an N x D matrix")
    rows, cols = data.shape
    return pack_header(DATASET_MAGIC, rows, cols) + pack_array(data, F64)


def read_dataset(reader: BinaryReader) -> np.ndarray:
    reader.expect_magic(DATASET_MAGIC)
    rows, cols = reader.header()
    if cols < 1:
        raise CheckpointFormatError(reader.path, f"invalid dimension D={cols}")
    return reader.array(F64, rows * cols, "samples").reshape(rows, cols)


def export_dataset(data: Union[Tensor, np.ndarray], path: Union[str, Path]) -> Path:
    values = data.data if isinstance(data, Tensor) else np.asarray(data, dtype=np.float64)
    return write_binary(pack_dataset(values), path)


def import_dataset(path: Union[str, Path]) -> np.ndarray:
    reader = BinaryReader(read_binary(path), path)
    data = read_dataset(reader)
    reader.finish()
    return data
