from pathlib import Path
from typing import Tuple, Union

from diveq.codebook.codebook import Codebook
from diveq.utils.binary import F64, U64, BinaryReader, pack_array, pack_header
from diveq.utils.checks import CheckpointFormatError
from diveq.utils.file_management import read_binary, write_binary

CHECKPOINT_MAGIC = b"DIVEQCB1"


def save_checkpoint(codebook: Codebook, path: Union[str, Path]) -> Path:
    """Writes the codebook in the binary checkpoint format

    Layout, little-endian: the magic string ``DIVEQCB1``, K and D as u64, a
    one-byte EMA flag, K*D f64 codewords row-major, K u64 usage counts and,
    when the flag is set, K*D f64 ``ema_g`` followed by K f64 ``ema_h``.
    """
    payload = [
        pack_header(CHECKPOINT_MAGIC, codebook.num_codewords, codebook.dim),
        bytes([1 if codebook.has_ema else 0]),
        pack_array(codebook.vectors.data, F64),
        pack_array(codebook.usage_counts, U64),
    ]
    if codebook.has_ema:
        payload.append(pack_array(codebook.ema_g, F64))
        payload.append(pack_array(codebook.ema_h, F64))
    return write_binary(b"".join(payload), path)


def load_checkpoint(
    path: Union[str, Path],
    expected_shape: Tuple[int, int] = None,
) -> Codebook:
    """Reads a codebook written by ``save_checkpoint``

    Parameters
    ----------
    path : Union[str, Path]
        Checkpoint file.
    expected_shape : Tuple[int, int], optional
        Reject checkpoints whose (K, D) differ.
    """
    reader = BinaryReader(read_binary(path), path)
    reader.expect_magic(CHECKPOINT_MAGIC)
    num_codewords, dim = reader.header()
    if num_codewords < 1 or dim < 1:
        raise CheckpointFormatError(
            path, f"invalid codebook shape K={num_codewords}, D={dim}"
        )
    if expected_shape is not None and (num_codewords, dim) != tuple(expected_shape):
        raise CheckpointFormatError(
            path,
            f"shape mismatch, expected {tuple(expected_shape)} "
            f"found {(num_codewords, dim)}",
        )
    flag = reader.byte("EMA flag")
    if flag not in (0, 1):
        raise CheckpointFormatError(path, f"invalid EMA flag {flag}")
    vectors = reader.array(F64, num_codewords * dim, "codewords")
    counts = reader.array(U64, num_codewords, "usage counts")
    ema_g = ema_h = None
    if flag:
        ema_g = reader.array(F64, num_codewords * dim, "EMA sums").reshape(
            num_codewords, dim
        )
        ema_h = reader.array(F64, num_codewords, "EMA counts")
    reader.finish()
    return Codebook(
        vectors.reshape(num_codewords, dim),
        usage_counts=counts.astype("int64"),
        ema_g=ema_g,
        ema_h=ema_h,
    )
