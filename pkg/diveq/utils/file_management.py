import json
from pathlib import Path
from typing import Union

import _pickle as pickle
import numpy as np
from loguru import logger

PathLike = Union[str, Path]


def _existing(filename: PathLike) -> Path:
    file = Path(filename)
    if not Path.is_file(file):
        raise FileNotFoundError("There is no file found in {}".format(filename))
    return file


def _writable(filename: PathLike) -> Path:
    file = Path(filename)
    Path.mkdir(file.parent, exist_ok=True, parents=True)
    return file


def save_object(obj, filename: PathLike) -> Path:
    """Pickles a trainer, overwriting any previous file"""
    file = _writable(filename)
    with Path.open(file, "wb") as outp:
        pickle.dump(obj, outp, -1)
    logger.info("Saved to {}", file)
    return file


def load_object(filename: PathLike):
    file = _existing(filename)
    with Path.open(file, "rb") as obj:
        logger.info("Successfully loaded from {}", file)
        return pickle.load(obj)


def delete_object(obj, filename: PathLike) -> None:
    file = Path(filename)
    if not Path.is_file(file):
        logger.warning("There is no file found in {}", file)
        return
    Path.unlink(file)
    logger.info("Removed from {}", file)
    if hasattr(obj, "path"):
        del obj.path


def write_binary(payload: bytes, filename: PathLike) -> Path:
    file = _writable(filename)
    file.write_bytes(payload)
    logger.info("Saved to {}", file)
    return file


def read_binary(filename: PathLike) -> bytes:
    file = _existing(filename)
    payload = file.read_bytes()
    logger.info("Successfully loaded from {}", file)
    return payload


def _to_builtin(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError("Object of type {} is not JSON serializable".format(type(value).__name__))


def write_json(obj, filename: PathLike) -> Path:
    file = _writable(filename)
    with Path.open(file, "w") as outp:
        json.dump(obj, outp, indent=2, sort_keys=True, default=_to_builtin)
    logger.info("Saved to {}", file)
    return file
