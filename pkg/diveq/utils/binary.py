import struct
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from diveq.utils.checks import CheckpointFormatError

F64 = np.dtype("<f8")
U64 = np.dtype("<u8")


def pack_header(magic: bytes, rows: int, cols: int) -> bytes:
    return magic + struct.pack("<QQ", rows, cols)


def pack_array(values: np.ndarray, dtype: np.dtype) -> bytes:
    return np.ascontiguousarray(values, dtype=dtype).tobytes()


class BinaryReader:
    """Sequential reader over a little-endian payload

    Every read past the end of the payload raises a ``CheckpointFormatError``
    naming the field that was being read.
    """

    def __init__(self, payload: bytes, path: Union[str, Path] = "<memory>"):
        self.payload = payload
        self.path = path
        self.offset = 0

    def take(self, size: int, what: str) -> bytes:
        end = self.offset + size
        if end > len(self.payload):
            raise CheckpointFormatError(
                self.path,
                f"truncated while reading {what} "
                f"({len(self.payload) - self.offset} of {size} bytes left)",
            )
        chunk = self.payload[self.offset : end]
        self.offset = end
        return chunk

    def expect_magic(self, magic: bytes) -> None:
        found = self.take(len(magic), "magic string")
        if found != magic:
            raise CheckpointFormatError(
                self.path, f"expected magic {magic!r}, found {found!r}"
            )

    def header(self) -> Tuple[int, int]:
        return struct.unpack("<QQ", self.take(16, "header"))

    def byte(self, what: str) -> int:
        return self.take(1, what)[0]

    def array(self, dtype: np.dtype, count: int, what: str) -> np.ndarray:
        chunk = self.take(dtype.itemsize * count, what)
        return np.frombuffer(chunk, dtype=dtype).copy()

    def finish(self) -> None:
        if self.offset != len(self.payload):
            raise CheckpointFormatError(
                self.path,
                f"{len(self.payload) - self.offset} unexpected trailing bytes",
            )
