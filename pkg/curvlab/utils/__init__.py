"""
组件库
"""

import logging
import random
from datetime import timedelta

import numpy as np

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def format_time(elapsed: float):
    """
    时间格式化
    Takes a time in seconds and
    returns a string hh:mm:ss
    """
    elapsed_rounded = int(round((elapsed)))

    # Format as hh:mm:ss
    return str(timedelta(seconds=elapsed_rounded))


def init_seed(seed_val: int) -> np.random.Generator:
    """
    Set the seed value all over the place to make this reproducible.

    Returns a PCG64 generator; sampling code draws only from it, the global
    seeds are set for third-party code that still uses them.
    """
    random.seed(seed_val)
    np.random.seed(seed_val)
    return np.random.Generator(np.random.PCG64(seed_val))


def random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    """
    单位球面上的均匀采样 (normalized Gaussian)
    """
    while True:
        vec = rng.standard_normal(dim)
        norm = np.linalg.norm(vec)
        if norm > 1e-12:
            return vec / norm


def setup_logging(level: int = logging.INFO) -> None:
    """
    配置根日志
    """
    root = logging.getLogger()
    if not any(getattr(h, "_curvlab", False) for h in root.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._curvlab = True  # pylint: disable=protected-access
        root.addHandler(handler)
    root.setLevel(level)
