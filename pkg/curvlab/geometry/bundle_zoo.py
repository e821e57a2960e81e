"""
主丛实例: Hopf 丛 S^3 -> S^7 -> S^4 与平凡丛 S^3 x S^k

The structure group S^3 acts by left quaternion multiplication on the blocks
listed in ``acted_blocks``. Action vectors, projectors and lifts take an
optional MetricField; ``None`` means the bundle's reference metric.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from functools import cached_property, lru_cache
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from curvlab.errors import (ConfigError, DimensionMismatchError,
                            OffManifoldError, SingularMetricError)
from curvlab.geometry.lie_core import (CONJUGATION, Quaternion, hamilton,
                                       left_matrix, right_matrix)
from curvlab.geometry.riemann_engine import MetricField, flat_metric
from curvlab.geometry.spheres import SphereProduct

logger = logging.getLogger(__name__)

# 左乘 i, j, k 的矩阵
GENERATORS = [left_matrix(np.eye(4)[k]) for k in (1, 2, 3)]

FREENESS_FLOOR = 1e-8


class BundleInstance(ABC):
    """
    S^3 主丛, 全空间与底空间都嵌入为球面乘积
    """

    name: str = ""
    group = "S3"

    def __init__(self, total: SphereProduct, base: SphereProduct,
                 acted_blocks: tuple[slice, ...], base_curvature: float):
        self.total = total
        self.base = base
        self.acted_blocks = acted_blocks
        self.base_curvature = base_curvature

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r})"

    @property
    def total_dim(self) -> int:
        """全空间维数"""
        return self.total.dim

    @property
    def base_dim(self) -> int:
        """底空间维数"""
        return self.base.dim

    @cached_property
    def reference_metric(self) -> MetricField:
        """参考度量: 圆球面的乘积"""
        return flat_metric(self.total, "reference")

    def check_point(self, p: np.ndarray) -> None:
        """嵌入约束"""
        self.total.check_point(p)

    def act(self, g: Quaternion, p: np.ndarray) -> np.ndarray:
        """g · p"""
        out = np.array(p, dtype=float)
        mat = left_matrix(g.array)
        for block in self.acted_blocks:
            out[block] = mat @ p[block]
        return out

    def act_differential(self, g: Quaternion, x: np.ndarray) -> np.ndarray:
        """dg · X, 作用是线性的"""
        return self.act(g, x)

    def action_vectors(self, p: np.ndarray) -> np.ndarray:
        """
        K = [i*, j*, k*], N x 3
        """
        cols = np.zeros((self.total.ambient_dim, 3))
        for k, gen in enumerate(GENERATORS):
            for block in self.acted_blocks:
                cols[block, k] = gen @ p[block]
        return cols

    @abstractmethod
    def projection(self, p: np.ndarray) -> np.ndarray:
        """π(p), 底空间的环境坐标"""

    @abstractmethod
    def projection_differential(self, p: np.ndarray) -> np.ndarray:
        """dπ_p, 矩阵 (底空间环境维数) x N"""

    def sample_point(self, rng: np.random.Generator) -> np.ndarray:
        """全空间上均匀采样"""
        return self.total.sample(rng)


class HopfBundle(BundleInstance):
    """
    S^3 -> S^7 -> S^4(1/2), π(p1, p2) = (½(|p1|² - |p2|²), conj(p1) p2)
    """

    name = "hopf"

    def __init__(self):
        super().__init__(total=SphereProduct((8, ), (1.0, )),
                         base=SphereProduct((5, ), (0.5, )),
                         acted_blocks=(slice(0, 4), slice(4, 8)),
                         base_curvature=4.0)

    def projection(self, p: np.ndarray) -> np.ndarray:
        p1, p2 = p[:4], p[4:]
        out = np.empty(5)
        out[0] = 0.5 * (p1 @ p1 - p2 @ p2)
        out[1:] = hamilton(CONJUGATION @ p1, p2)
        return out

    def projection_differential(self, p: np.ndarray) -> np.ndarray:
        p1, p2 = p[:4], p[4:]
        out = np.zeros((5, 8))
        out[0, :4] = p1
        out[0, 4:] = -p2
        # d(conj(x1) p2) + d(conj(p1) x2)
        out[1:, :4] = right_matrix(p2) @ CONJUGATION
        out[1:, 4:] = left_matrix(CONJUGATION @ p1)
        return out


class TrivialBundle(BundleInstance):
    """
    S^3 x S^k -> S^k, 群作用在第一个因子上
    """

    def __init__(self, fiber_dim: int):
        self.name = f"trivial3x{fiber_dim}"
        super().__init__(total=SphereProduct((4, fiber_dim + 1), (1.0, 1.0)),
                         base=SphereProduct((fiber_dim + 1, ), (1.0, )),
                         acted_blocks=(slice(0, 4), ),
                         base_curvature=1.0)

    def projection(self, p: np.ndarray) -> np.ndarray:
        return np.array(p[4:], dtype=float)

    def projection_differential(self, p: np.ndarray) -> np.ndarray:
        out = np.zeros((self.base.ambient_dim, self.total.ambient_dim))
        out[:, 4:] = np.eye(self.base.ambient_dim)
        return out


BUNDLES: dict[str, Callable[[], BundleInstance]] = {
    "hopf": HopfBundle,
    "trivial3x2": lambda: TrivialBundle(2),
    "trivial3x4": lambda: TrivialBundle(4),
}


@lru_cache(maxsize=None)
def load_bundle(name: str) -> BundleInstance:
    """
    按名称加载丛实例
    """
    if name not in BUNDLES:
        raise ConfigError(
            f"unknown bundle {name!r}; choose from {', '.join(BUNDLES)}")
    return BUNDLES[name]()


def _metric(b: BundleInstance, metric: Optional[MetricField]) -> MetricField:
    return b.reference_metric if metric is None else metric


def action_vector(b: BundleInstance, p: np.ndarray, u: np.ndarray) -> np.ndarray:
    """
    U*(p) = d/dt Exp(tU)·p at t = 0
    """
    b.check_point(p)
    return b.action_vectors(p) @ np.asarray(u, dtype=float)


def orbit_gram(b: BundleInstance,
               p: np.ndarray,
               metric: Optional[MetricField] = None) -> np.ndarray:
    """
    轨道 Gram 矩阵 K^T G K, 即 g(U*, V*) = Q(PU, V) 中的 P
    """
    cols = b.action_vectors(p)
    gram = cols.T @ _metric(b, metric).gram(p) @ cols
    gram = 0.5 * (gram + gram.T)
    if scipy.linalg.eigvalsh(gram)[0] <= FREENESS_FLOOR:
        raise SingularMetricError("orbit Gram matrix is singular; action not free")
    return gram


def connection_form(b: BundleInstance,
                    p: np.ndarray,
                    metric: Optional[MetricField] = None) -> np.ndarray:
    """
    联络形式 θ = P^{-1} K^T G, 3 x N; θ(U*) = U
    """
    metric = _metric(b, metric)
    cols = b.action_vectors(p)
    return np.linalg.solve(orbit_gram(b, p, metric), cols.T @ metric.gram(p))


def vertical_projector(b: BundleInstance,
                       p: np.ndarray,
                       metric: Optional[MetricField] = None) -> np.ndarray:
    """
    到 V_p 的 g-正交投影 K θ
    """
    return b.action_vectors(p) @ connection_form(b, p, metric)


def horizontal_projector(b: BundleInstance,
                         p: np.ndarray,
                         metric: Optional[MetricField] = None) -> np.ndarray:
    """到 H_p 的 g-正交投影"""
    return np.eye(b.total.ambient_dim) - vertical_projector(b, p, metric)


def horizontal_basis(b: BundleInstance,
                     p: np.ndarray,
                     metric: Optional[MetricField] = None) -> np.ndarray:
    """
    H_p 的欧氏正交基, N x (n - 3)
    """
    spanning = horizontal_projector(b, p, metric) @ b.total.tangent_basis(p)
    basis = scipy.linalg.orth(spanning, rcond=1e-8)
    expected = b.total_dim - 3
    if basis.shape[1] != expected:
        raise DimensionMismatchError(
            f"horizontal space has dimension {basis.shape[1]}, expected {expected}")
    return basis


def bundle_projection(b: BundleInstance, p: np.ndarray) -> np.ndarray:
    """π(p)"""
    b.check_point(p)
    return b.projection(p)


def horizontal_lift(b: BundleInstance,
                    base_point: np.ndarray,
                    base_vector: np.ndarray,
                    p: np.ndarray,
                    metric: Optional[MetricField] = None) -> np.ndarray:
    """
    底空间切向量在 p 处的水平提升
    """
    base_vector = np.asarray(base_vector, dtype=float)
    if base_vector.shape != (b.base.ambient_dim, ):
        raise DimensionMismatchError(
            f"base vector must live in R^{b.base.ambient_dim}, "
            f"got shape {base_vector.shape}")
    b.check_point(p)
    if np.linalg.norm(b.projection(p) - base_point) > 1e-8:
        raise OffManifoldError("p does not lie over the given base point")
    basis = horizontal_basis(b, p, metric)
    coeffs, *_ = np.linalg.lstsq(b.projection_differential(p) @ basis,
                                 base_vector,
                                 rcond=None)
    return basis @ coeffs


def basic_extension(b: BundleInstance,
                    p: np.ndarray,
                    x: np.ndarray,
                    metric: Optional[MetricField] = None
                    ) -> Callable[[np.ndarray], np.ndarray]:
    """
    X 的基本延拓: 底空间向量场 (dπ_p X 在 π(q) 处的切投影) 的水平提升
    """
    base_vector = b.projection_differential(p) @ x

    def field(q: np.ndarray) -> np.ndarray:
        base_point = b.projection(q)
        local = b.base.tangent_project(base_point, base_vector)
        return horizontal_lift(b, base_point, local, q, metric)

    return field


def projected_extension(b: BundleInstance,
                        x: np.ndarray,
                        metric: Optional[MetricField] = None
                        ) -> Callable[[np.ndarray], np.ndarray]:
    """
    X 的投影延拓: 常向量先切投影再水平投影
    """

    def field(q: np.ndarray) -> np.ndarray:
        return horizontal_projector(b, q, metric) @ b.total.tangent_project(q, x)

    return field


def action_field(b: BundleInstance,
                 u: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """固定李代数元素 u 的作用场 q -> u*(q)"""
    return lambda q: b.action_vectors(q) @ u
