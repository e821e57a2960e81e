"""
一般竖直扭曲: 竖直部分乘以 h^{-1}, h 为基本函数

Curvature of the warped metric g_h = g|_H + h^{-1} g|_V for the three plane
types, expressed through g-quantities:

    hh: (1 - 1/h) K_B(X, Y) + K(X, Y) / h
    vv: (1/h - 1/h²) K_F + K / h² - |V1|²|V2|²|∇h|² / 4h⁴
        - dh(σ11)|V2|² / 2h³ - dh(σ22)|V1|² / 2h³
    vh: K / h - (1 - 1/h)|A*_X V|² / h - dh(X) g(S_X V, V) / h²
        - (3 dh(X)² / h³ - 2 Hess h(X, X) / h²) |V|² / 4
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from curvlab.errors import BasicFunctionError, ParameterError
from curvlab.geometry.bundle_zoo import BundleInstance
from curvlab.geometry.lie_core import group_exp
from curvlab.geometry.riemann_engine import (LocalGeometry, MetricField,
                                             NumericsConfig)
from curvlab.submersion.cheeger import vertical_rescaled_metric
from curvlab.submersion.oneill import SubmersionFrame

logger = logging.getLogger(__name__)

BASIC_TOL = 1e-8
PLANE_KINDS = ("hh", "vv", "vh")

# 检查沿纤维是否为常数时使用的群元素
_FIBER_SHIFTS = [group_exp(0.7 * e) for e in np.eye(3)] + [
    group_exp(np.array([0.3, -1.1, 0.5]))
]


@dataclass(frozen=True)
class BasicFunction:
    """
    全空间上的正函数 h, 要求沿纤维为常数
    """
    func: Callable[[np.ndarray], float]
    description: str = "h"

    def __call__(self, q: np.ndarray) -> float:
        return float(self.func(q))


def linear_height(b: BundleInstance, offset: float = 2.0) -> BasicFunction:
    """
    h = offset + 底空间第一个坐标
    """
    return BasicFunction(lambda q: offset + float(b.projection(q)[0]),
                         f"{offset:g} + x0")


def constant_function(value: float) -> BasicFunction:
    """常数函数"""
    return BasicFunction(lambda _q: value, f"{value:g}")


def check_basic(b: BundleInstance, h: BasicFunction, p: np.ndarray) -> None:
    """
    h > 0 且沿纤维不变
    """
    value = h(p)
    if value <= 0:
        raise ParameterError(f"warping function must be positive, got {value}")
    for g in _FIBER_SHIFTS:
        drift = abs(h(b.act(g, p)) - value)
        if drift > BASIC_TOL:
            raise BasicFunctionError(
                f"{h.description} varies along the fiber by {drift:.3e}")


def warped_metric(b: BundleInstance, m: Optional[MetricField],
                  h: BasicFunction) -> MetricField:
    """
    g_h: 竖直部分 P -> P / h
    """
    return vertical_rescaled_metric(b, m, lambda orbit, q: orbit / h(q),
                                    f"warped({h.description})")


def _sigma(frame: SubmersionFrame, v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """σ(V, W) = Σ_j g(S_{H_j} V, W) H_j"""
    coeffs = [frame.inner(frame.s_tensor(hj, v), w) for hj in frame.horizontal_on.T]
    return frame.horizontal_on @ np.array(coeffs)


def warped_sectional(b: BundleInstance,
                     m: Optional[MetricField],
                     h: BasicFunction,
                     p: np.ndarray,
                     plane_kind: str,
                     vectors: tuple[np.ndarray, np.ndarray],
                     numerics: Optional[NumericsConfig] = None) -> float:
    """
    扭曲度量的 (未约化) 截面曲率, 由 g 的量计算
    """
    if plane_kind not in PLANE_KINDS:
        raise ParameterError(
            f"plane kind must be one of {', '.join(PLANE_KINDS)}, got {plane_kind!r}")
    check_basic(b, h, p)
    frame = SubmersionFrame(b, m, p, numerics)
    local = frame.local
    first, second = vectors
    inv = 1.0 / h(p)
    grad = local.gradient(h)

    if plane_kind == "hh":
        frame.require_horizontal(first, "X")
        frame.require_horizontal(second, "Y")
        kappa = local.sectional(first, second)
        k_base = kappa + 3 * frame.norm(frame.a_tensor(first, second))**2
        return (1 - inv) * k_base + inv * kappa

    if plane_kind == "vv":
        frame.require_vertical(first, "V1")
        frame.require_vertical(second, "V2")
        if abs(frame.inner(first, second)) > BASIC_TOL:
            raise ParameterError("vv planes need g(V1, V2) = 0")
        kappa = local.sectional(first, second)
        s11 = _sigma(frame, first, first)
        s22 = _sigma(frame, second, second)
        s12 = _sigma(frame, first, second)
        k_fiber = kappa + frame.inner(s11, s22) - frame.inner(s12, s12)
        n1, n2 = frame.inner(first, first), frame.inner(second, second)
        return ((inv - inv**2) * k_fiber + inv**2 * kappa -
                0.25 * inv**4 * n1 * n2 * frame.inner(grad, grad) -
                0.5 * inv**3 * frame.inner(grad, s11) * n2 -
                0.5 * inv**3 * frame.inner(grad, s22) * n1)

    x, v = first, second
    frame.require_horizontal(x, "X")
    frame.require_vertical(v, "V")
    kappa = local.sectional(x, v)
    dhx = frame.inner(grad, x)
    hess = local.hessian_form(h, x, x)
    return (inv * kappa -
            inv * (1 - inv) * frame.norm(frame.a_star(x, v))**2 -
            inv**2 * dhx * frame.inner(frame.s_tensor(x, v), v) -
            0.25 * (-2 * hess * inv**2 + 3 * dhx**2 * inv**3) * frame.inner(v, v))


def warped_sectional_oracle(b: BundleInstance,
                            m: Optional[MetricField],
                            h: BasicFunction,
                            p: np.ndarray,
                            vectors: tuple[np.ndarray, np.ndarray],
                            numerics: Optional[NumericsConfig] = None) -> float:
    """扭曲度量的有限差分截面曲率"""
    first, second = vectors
    local = LocalGeometry(warped_metric(b, m, h), p, numerics)
    return local.sectional(first, second)
