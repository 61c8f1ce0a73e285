__version__ = "0.1.0"


import sys
from pathlib import Path

from loguru import logger

logger.remove()
logger.add(sys.stderr, level="INFO")


def set_verbosity(level: str = "INFO") -> None:
    """
    Reset the stderr sink of the library logger to the given level
    """
    logger.remove()
    logger.add(sys.stderr, level=level)


CACHE_DIR = Path.home() / ".cache" / "diveq"
