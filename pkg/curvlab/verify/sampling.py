"""
可复现的样本

A draw holds only the raw randomness of one sample: a total-space point and
coefficient vectors. The frame itself is realized later against whatever
metric a suite needs, so one seed gives the same draws for every metric.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from curvlab.errors import DegeneratePlaneError
from curvlab.geometry.bundle_zoo import BundleInstance
from curvlab.geometry.riemann_engine import MetricField, NumericsConfig
from curvlab.submersion.oneill import SubmersionFrame, VertizontalFrame
from curvlab.utils import init_seed, random_unit

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SampleDraw:
    """
    一个样本的原始随机数
    """
    index: int
    p: np.ndarray
    x_coeffs: np.ndarray
    y_coeffs: np.ndarray
    v_coeffs: np.ndarray
    extra: np.ndarray

    def as_dict(self) -> dict:
        """报告里记录的样本坐标"""
        return {
            "p": self.p.tolist(),
            "x": self.x_coeffs.tolist(),
            "y": self.y_coeffs.tolist(),
            "v": self.v_coeffs.tolist(),
        }


def sample_draws(b: BundleInstance, count: int, seed: int) -> list[SampleDraw]:
    """
    同一个种子得到逐位相同的样本
    """
    rng = init_seed(seed)
    horizontal = b.total_dim - 3
    draws = []
    for index in range(count):
        p = b.sample_point(rng)
        draws.append(
            SampleDraw(index=index,
                       p=p,
                       x_coeffs=random_unit(rng, horizontal),
                       y_coeffs=random_unit(rng, horizontal),
                       v_coeffs=random_unit(rng, 3),
                       extra=random_unit(rng, 3)))
    logger.debug("drew %d samples on %s with seed %d", count, b.name, seed)
    return draws


def realize_frame(b: BundleInstance,
                  m: Optional[MetricField],
                  draw: SampleDraw,
                  numerics: Optional[NumericsConfig] = None) -> VertizontalFrame:
    """
    在 m 下的 g-正交单位标架: X, Y ∈ H, V ∈ V
    """
    frame = SubmersionFrame(b, m, draw.p, numerics)
    basis = frame.horizontal_on
    x = basis @ draw.x_coeffs
    # Y 在 H 的标准正交坐标里做 Gram-Schmidt
    y_coeffs = draw.y_coeffs - (draw.y_coeffs @ draw.x_coeffs) * draw.x_coeffs
    length = np.linalg.norm(y_coeffs)
    if length < 1e-8:
        raise DegeneratePlaneError(length**2)
    y = basis @ (y_coeffs / length)
    v = frame.vertical_on @ draw.v_coeffs
    return VertizontalFrame(draw.p, x, y, v, frame.algebra(v))
