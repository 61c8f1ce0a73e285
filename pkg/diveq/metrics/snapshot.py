from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from diveq.autodiff import Tensor
from diveq.codebook import Codebook
from diveq.io.files import pack_dataset, read_dataset
from diveq.utils.binary import BinaryReader
from diveq.utils.checks import CheckpointFormatError, ShapeError
from diveq.utils.file_management import read_binary, write_binary

LATENT_ROLE = 0
CODEWORD_ROLE = 1


@dataclass
class AlignmentSnapshot:
    vectors: np.ndarray
    roles: np.ndarray

    @property
    def latents(self) -> np.ndarray:
        return self.vectors[self.roles == LATENT_ROLE]

    @property
    def codewords(self) -> np.ndarray:
        return self.vectors[self.roles == CODEWORD_ROLE]


def export_alignment_snapshot(
    codebook: Codebook,
    latent_sample: Union[Tensor, np.ndarray],
    path: Union[str, Path],
) -> Path:
    """Writes latents and codewords together for external embedding tools

    The file is a dataset file holding the latent rows then the codeword
    rows, followed by one role byte per row (0 latent, 1 codeword).
    """
    latents = latent_sample.data if isinstance(latent_sample, Tensor) else latent_sample
    latents = np.asarray(latents, dtype=np.float64)
    if latents.size == 0:
        latents = latents.reshape(0, codebook.dim)
    if latents.ndim != 2 or latents.shape[1] != codebook.dim:
        raise ShapeError(
            "export_alignment_snapshot", [latents.shape, codebook.vectors.shape]
        )
    vectors = np.concatenate([latents, codebook.vectors.data])
    roles = np.concatenate(
        [
            np.full(len(latents), LATENT_ROLE, dtype=np.uint8),
            np.full(codebook.num_codewords, CODEWORD_ROLE, dtype=np.uint8),
        ]
    )
    return write_binary(pack_dataset(vectors) + roles.tobytes(), path)


def load_alignment_snapshot(path: Union[str, Path]) -> AlignmentSnapshot:
    reader = BinaryReader(read_binary(path), path)
    vectors = read_dataset(reader)
    roles = np.frombuffer(reader.take(len(vectors), "role column"), dtype=np.uint8).copy()
    reader.finish()
    if np.any(roles > CODEWORD_ROLE):
        raise CheckpointFormatError(path, "unknown role tag in the role column")
    return AlignmentSnapshot(vectors=vectors, roles=roles)
