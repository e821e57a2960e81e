"""
O'Neill 张量 A, A*, S, 联络曲率 Ω, 胖性与 ∇A

All tensors are evaluated at a point of the total space from finite
differences of extensions, with the Levi-Civita connection of the metric
taken from riemann_engine.LocalGeometry.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from curvlab.errors import (DegeneratePlaneError, HypothesisViolatedError,
                            ParameterError)
from curvlab.geometry import bundle_zoo
from curvlab.geometry.bundle_zoo import BundleInstance
from curvlab.geometry.riemann_engine import (DEGENERATE_PLANE_DET,
                                             LocalGeometry, MetricField,
                                             NumericsConfig, g_orthonormal,
                                             resolve_numerics)

logger = logging.getLogger(__name__)

EPS_FAT = 1e-8
KERNEL_RELATIVE = 1e-6
KERNEL_FLOOR = 1e-9
HORIZONTAL_TOL = 1e-8
TOTALLY_GEODESIC_TOL = 1e-4

Field = Callable[[np.ndarray], np.ndarray]


@dataclass
class VertizontalFrame:
    """
    p 处的 g-正交单位标架 X, Y 水平, V 竖直, u*(p) = V
    """
    p: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    V: np.ndarray
    u: Optional[np.ndarray] = None


@dataclass
class FatnessCertificate:
    """ω_V 的矩阵与判定"""
    p: np.ndarray
    V: np.ndarray
    omega_matrix: np.ndarray
    min_abs_det: float
    verdict: str

    @property
    def is_fat(self) -> bool:
        """是否非退化"""
        return self.verdict == "fat"


@dataclass
class NablaAResult:
    """(∇_X A)_X Y 的两种计算"""
    value: np.ndarray
    oracle: np.ndarray
    residual: float


class SubmersionFrame:
    """
    p 处的竖直/水平分解与 O'Neill 张量
    """

    def __init__(self,
                 bundle: BundleInstance,
                 metric: Optional[MetricField],
                 p: np.ndarray,
                 numerics: Optional[NumericsConfig] = None,
                 extension: str = "projected"):
        if extension not in ("projected", "basic"):
            raise ParameterError(f"unknown extension scheme {extension!r}")
        bundle.check_point(p)
        self.bundle = bundle
        self.metric = bundle.reference_metric if metric is None else metric
        self.p = np.asarray(p, dtype=float)
        self.numerics = resolve_numerics(numerics)
        self.extension = extension

    @cached_property
    def local(self) -> LocalGeometry:
        """p 处的局部几何"""
        return LocalGeometry(self.metric, self.p, self.numerics)

    @cached_property
    def gram(self) -> np.ndarray:
        """G(p)"""
        return self.metric.gram(self.p)

    @cached_property
    def action(self) -> np.ndarray:
        """K = [i*, j*, k*]"""
        return self.bundle.action_vectors(self.p)

    @cached_property
    def orbit(self) -> np.ndarray:
        """轨道张量 P"""
        return bundle_zoo.orbit_gram(self.bundle, self.p, self.metric)

    @cached_property
    def theta(self) -> np.ndarray:
        """联络形式"""
        return bundle_zoo.connection_form(self.bundle, self.p, self.metric)

    @cached_property
    def vertical_projector(self) -> np.ndarray:
        """Π_v"""
        return self.action @ self.theta

    @cached_property
    def horizontal_on(self) -> np.ndarray:
        """H_p 的 g-标准正交基"""
        basis = bundle_zoo.horizontal_basis(self.bundle, self.p, self.metric)
        return g_orthonormal(self.metric, self.p, basis)

    @cached_property
    def vertical_on(self) -> np.ndarray:
        """V_p 的 g-标准正交基"""
        return g_orthonormal(self.metric, self.p, self.action)

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        """g_p(a, b)"""
        return float(a @ self.gram @ b)

    def norm(self, a: np.ndarray) -> float:
        """g_p 范数"""
        return float(np.sqrt(max(self.inner(a, a), 0.0)))

    def vertical(self, x: np.ndarray) -> np.ndarray:
        """竖直分量"""
        return self.vertical_projector @ x

    def horizontal(self, x: np.ndarray) -> np.ndarray:
        """水平分量"""
        return x - self.vertical(x)

    def algebra(self, x: np.ndarray) -> np.ndarray:
        """θ(x), 即竖直分量对应的李代数元素"""
        return self.theta @ x

    def star(self, u: np.ndarray) -> np.ndarray:
        """u*(p)"""
        return self.action @ u

    def require_horizontal(self, x: np.ndarray, name: str = "X") -> None:
        """水平性检查"""
        if self.norm(self.vertical(x)) > HORIZONTAL_TOL * max(1.0, self.norm(x)):
            raise ParameterError(f"{name} is not horizontal")

    def require_vertical(self, v: np.ndarray, name: str = "V") -> None:
        """竖直性检查"""
        if self.norm(self.horizontal(v)) > HORIZONTAL_TOL * max(1.0, self.norm(v)):
            raise ParameterError(f"{name} is not vertical")

    def horizontal_field(self, x: np.ndarray) -> Field:
        """X 的水平延拓"""
        if self.extension == "basic":
            return bundle_zoo.basic_extension(self.bundle, self.p, x, self.metric)
        return bundle_zoo.projected_extension(self.bundle, x, self.metric)

    def vertical_field(self, v: np.ndarray) -> Field:
        """V 的竖直延拓: θ(V) 的作用场"""
        return bundle_zoo.action_field(self.bundle, self.algebra(v))

    def nabla(self, field: Field, direction: np.ndarray,
              step: Optional[float] = None) -> np.ndarray:
        """∇_direction field"""
        return self.local.covariant_derivative(field, direction, step)

    def a_tensor(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """
        A_X Y = ½ [X̃, Ỹ]^v
        """
        self.require_horizontal(x, "X")
        self.require_horizontal(y, "Y")
        bracket = (self.nabla(self.horizontal_field(y), x) -
                   self.nabla(self.horizontal_field(x), y))
        return 0.5 * self.vertical(bracket)

    def a_rows(self, x: np.ndarray) -> np.ndarray:
        """A_X H_j, 每行一个"""
        return np.array([self.a_tensor(x, h) for h in self.horizontal_on.T])

    def a_star(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        """
        A*_X V = Σ_j g(A_X H_j, V) H_j
        """
        self.require_vertical(v)
        return self.horizontal_on @ (self.a_rows(x) @ self.gram @ v)

    def s_tensor(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        """
        S_X V = -(∇_V X̃)^v
        """
        self.require_horizontal(x, "X")
        self.require_vertical(v)
        return -self.vertical(self.nabla(self.horizontal_field(x), v))

    def s_norm(self) -> float:
        """
        |S| 的 Frobenius 范数, 在标准正交基上
        """
        total = 0.0
        for h in self.horizontal_on.T:
            for v in self.vertical_on.T:
                total += self.norm(self.s_tensor(h, v))**2
        return float(np.sqrt(total))

    def require_totally_geodesic(self,
                                 threshold: float = TOTALLY_GEODESIC_TOL) -> float:
        """
        纤维全测地的数值检查, 不满足时抛出 HypothesisViolatedError
        """
        measured = self.s_norm()
        if measured > threshold:
            raise HypothesisViolatedError(measured, threshold)
        return measured

    def directional(self, func: Callable[[np.ndarray], np.ndarray],
                    x: np.ndarray) -> np.ndarray:
        """沿回缩曲线 retract(p, sX) 的中心差分"""
        h = self.numerics.fd_step_first
        manifold = self.metric.manifold
        ahead = manifold.retract(self.p, h * x)
        behind = manifold.retract(self.p, -h * x)
        return (func(ahead) - func(behind)) / (2 * h)

    def theta_derivative(self, x: np.ndarray) -> np.ndarray:
        """D_X θ, 3 x N"""
        return self.directional(
            lambda q: bundle_zoo.connection_form(self.bundle, q, self.metric), x)

    def orbit_derivative(self, x: np.ndarray) -> np.ndarray:
        """D_X P"""
        return self.directional(
            lambda q: bundle_zoo.orbit_gram(self.bundle, q, self.metric), x)

    def a_star_curvature(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        """
        A*_X V 由联络曲率得到: g(A_X H_j, u*) = -½ Q(Ω(X, H_j), P u)
        """
        pu = self.orbit @ self.algebra(v)
        dx = self.theta_derivative(x)
        coeffs = []
        for h in self.horizontal_on.T:
            omega = dx @ h - self.theta_derivative(h) @ x
            coeffs.append(-0.5 * omega @ pu)
        return self.horizontal_on @ np.array(coeffs)

    def s_orbit(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        """
        S_X u* = -½ (P^{-1} (D_X P) u)*, 对不变度量成立
        """
        return -0.5 * self.star(
            np.linalg.solve(self.orbit,
                            self.orbit_derivative(x) @ self.algebra(v)))

    def connection_curvature(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """
        Ω(X, Y) = (D_X θ)Y - (D_Y θ)X, 取值于李代数
        """
        self.require_horizontal(x, "X")
        self.require_horizontal(y, "Y")
        return self.theta_derivative(x) @ y - self.theta_derivative(y) @ x

    def omega_matrix(self, v: np.ndarray) -> np.ndarray:
        """
        ω_V(H_i, H_j) = g(A_{H_i} H_j, V)
        """
        basis = self.horizontal_on
        size = basis.shape[1]
        out = np.zeros((size, size))
        for i in range(size):
            for j in range(i + 1, size):
                out[i, j] = self.inner(self.a_tensor(basis[:, i], basis[:, j]), v)
                out[j, i] = -out[i, j]
        return out

    def a_star_field(self, x_field: Field, v_field: Field) -> Field:
        """q -> A*_{X̃(q)} Ṽ(q)"""

        def field(q: np.ndarray) -> np.ndarray:
            frame = self.moved(q)
            return frame.a_star(x_field(q), v_field(q))

        return field

    def a_field(self, x_field: Field, y_field: Field) -> Field:
        """q -> A_{X̃(q)} Ỹ(q)"""

        def field(q: np.ndarray) -> np.ndarray:
            frame = self.moved(q)
            return frame.a_tensor(x_field(q), y_field(q))

        return field

    def moved(self, q: np.ndarray) -> SubmersionFrame:
        """同一度量与参数在另一点的标架"""
        return SubmersionFrame(self.bundle, self.metric, q, self.numerics,
                               self.extension)

    def nabla_a(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """
        (∇_X A)_X Y 的竖直部分, 外层差分步长 h2
        """
        x_field, y_field = self.horizontal_field(x), self.horizontal_field(y)
        step = self.numerics.fd_step_second
        outer = self.vertical(self.nabla(self.a_field(x_field, y_field), x, step))
        dx = self.horizontal(self.nabla(x_field, x))
        dy = self.horizontal(self.nabla(y_field, x))
        return outer - self.a_tensor(dx, y) - self.a_tensor(x, dy)

    def nabla_a_oracle(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """
        由曲率求 (∇_X A)_X Y: g(·, K_k) = R(Y, X, X, K_k)
        """
        rhs = np.array([
            self.local.riemann4(y, x, x, col) for col in self.action.T
        ])
        return self.action @ np.linalg.solve(self.orbit, rhs)

    def nabla_a_star(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        """
        (∇_X A*)_X V 的水平部分
        """
        x_field, v_field = self.horizontal_field(x), self.vertical_field(v)
        step = self.numerics.fd_step_second
        outer = self.horizontal(
            self.nabla(self.a_star_field(x_field, v_field), x, step))
        dx = self.horizontal(self.nabla(x_field, x))
        dv = self.vertical(self.nabla(v_field, x))
        return outer - self.a_star(dx, v) - self.a_star(x, dv)


def a_tensor(b: BundleInstance,
             m: Optional[MetricField],
             p: np.ndarray,
             x: np.ndarray,
             y: np.ndarray,
             extension: str = "projected",
             numerics: Optional[NumericsConfig] = None) -> np.ndarray:
    """A_X Y, 竖直"""
    return SubmersionFrame(b, m, p, numerics, extension).a_tensor(x, y)


def a_star(b: BundleInstance,
           m: Optional[MetricField],
           p: np.ndarray,
           x: np.ndarray,
           v: np.ndarray,
           numerics: Optional[NumericsConfig] = None) -> np.ndarray:
    """A*_X V, 水平; g(A*_X V, Y) = g(A_X Y, V)"""
    return SubmersionFrame(b, m, p, numerics).a_star(x, v)


def s_tensor(b: BundleInstance,
             m: Optional[MetricField],
             p: np.ndarray,
             x: np.ndarray,
             v: np.ndarray,
             numerics: Optional[NumericsConfig] = None) -> np.ndarray:
    """S_X V, 竖直"""
    return SubmersionFrame(b, m, p, numerics).s_tensor(x, v)


def connection_curvature(b: BundleInstance,
                         m: Optional[MetricField],
                         p: np.ndarray,
                         x: np.ndarray,
                         y: np.ndarray,
                         numerics: Optional[NumericsConfig] = None) -> np.ndarray:
    """Ω(X, Y), 满足 Ω(X, Y)* = -2 A_X Y"""
    return SubmersionFrame(b, m, p, numerics).connection_curvature(x, y)


def fatness_check(b: BundleInstance,
                  m: Optional[MetricField],
                  p: np.ndarray,
                  v: np.ndarray,
                  numerics: Optional[NumericsConfig] = None,
                  eps_fat: float = EPS_FAT) -> FatnessCertificate:
    """
    ω_V 是否非退化
    """
    frame = SubmersionFrame(b, m, p, numerics)
    frame.require_vertical(v)
    if frame.norm(v) == 0.0:
        raise ParameterError("V must be nonzero")
    omega = frame.omega_matrix(v)
    if omega.shape[0] % 2 == 1:
        # 奇数维反对称矩阵行列式为零
        det, verdict = 0.0, "degenerate"
    else:
        det = abs(float(np.linalg.det(omega)))
        verdict = "fat" if det > eps_fat else "degenerate"
    logger.debug("fatness at p: |det ω_V| = %.3e (%s)", det, verdict)
    return FatnessCertificate(p, v, omega, det, verdict)


def fat_vector_check(b: BundleInstance,
                     m: Optional[MetricField],
                     p: np.ndarray,
                     v: np.ndarray,
                     numerics: Optional[NumericsConfig] = None) -> float:
    """
    X -> A*_X V 在单位水平向量上的最小奇异值
    """
    frame = SubmersionFrame(b, m, p, numerics)
    frame.require_vertical(v)
    return float(scipy.linalg.svdvals(frame.omega_matrix(v))[-1])


def kernel_a_x(b: BundleInstance,
               m: Optional[MetricField],
               p: np.ndarray,
               x: np.ndarray,
               numerics: Optional[NumericsConfig] = None) -> np.ndarray:
    """
    ker A_X ⊂ H_p 的 g-标准正交基, 每列一个
    """
    frame = SubmersionFrame(b, m, p, numerics)
    frame.require_horizontal(x)
    if frame.norm(x) == 0.0:
        raise ParameterError("X must be nonzero")
    # 行: 竖直标准正交坐标, 列: 水平基
    table = frame.vertical_on.T @ frame.gram @ frame.a_rows(x).T
    _, singular, vt = scipy.linalg.svd(table)
    threshold = max(KERNEL_RELATIVE * (singular[0] if singular.size else 0.0),
                    KERNEL_FLOOR)
    rank = int(np.sum(singular > threshold))
    return frame.horizontal_on @ vt[rank:].T


def nabla_a(b: BundleInstance,
            m: Optional[MetricField],
            p: np.ndarray,
            x: np.ndarray,
            y: np.ndarray,
            numerics: Optional[NumericsConfig] = None) -> NablaAResult:
    """
    (∇_X A)_X Y: 张量修正的差分值与曲率恒等式给出的值
    """
    frame = SubmersionFrame(b, m, p, numerics)
    value = frame.nabla_a(x, y)
    oracle = frame.nabla_a_oracle(x, y)
    residual = frame.norm(value - oracle)
    logger.debug("nabla A residual %.3e", residual)
    return NablaAResult(value, oracle, residual)


def nabla_a_star(b: BundleInstance,
                 m: Optional[MetricField],
                 p: np.ndarray,
                 x: np.ndarray,
                 v: np.ndarray,
                 numerics: Optional[NumericsConfig] = None) -> np.ndarray:
    """(∇_X A*)_X V"""
    return SubmersionFrame(b, m, p, numerics).nabla_a_star(x, v)


def base_sectional_oneill(b: BundleInstance,
                          m: Optional[MetricField],
                          p: np.ndarray,
                          x: np.ndarray,
                          y: np.ndarray,
                          numerics: Optional[NumericsConfig] = None) -> float:
    """
    K_B(X, Y) = K_g(X, Y) + 3|A_X Y|², 约化
    """
    frame = SubmersionFrame(b, m, p, numerics)
    unreduced = frame.local.sectional(x, y) + 3 * frame.norm(frame.a_tensor(x, y))**2
    det = frame.inner(x, x) * frame.inner(y, y) - frame.inner(x, y)**2
    if det < DEGENERATE_PLANE_DET:
        raise DegeneratePlaneError(det)
    return unreduced / det
