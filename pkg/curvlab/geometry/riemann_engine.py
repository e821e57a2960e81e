"""
黎曼几何数值引擎

Metric fields are Gram matrices G(q) on the ambient representation of a
sphere product. Everything intrinsic (Christoffel symbols, Riemann tensor,
covariant derivatives) is computed in the orthographic chart centered at the
evaluation point by central differences of the pulled-back metric; this is the
oracle the closed-form submersion formulas are compared against.

ODEs (geodesics, transport, Jacobi fields) are integrated ambiently:

    q' = v,  v' = -Γ(v, v),  w' = F - Γ(v, w)

where Γ(a, b) is the normal curvature of the embedding plus the chart-center
Christoffel term, and F is the prescribed covariant derivative of w.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg

from curvlab.errors import (ConfigError, DegeneratePlaneError,
                            IntegrationError, SingularMetricError)
from curvlab.geometry.spheres import SphereProduct

logger = logging.getLogger(__name__)

DEGENERATE_PLANE_DET = 1e-10
MIN_EIGENVALUE = 1e-12

Vector = np.ndarray
FieldLaw = Callable[[np.ndarray, np.ndarray, list], list]
Stabilizer = Callable[[np.ndarray, np.ndarray], np.ndarray]


class NumericsConfig:
    """
    有限差分步长与积分参数
    """

    # 默认参数
    defaults = {
        "fd_step_first": 1e-4,  # 度量的一阶导数
        "fd_step_second": 1e-3,  # Christoffel 的导数, 即 Riemann
        "rk4_steps_per_unit": 2000,
        "richardson": False,  # 一阶 Richardson 外推
        "proj_stabilize": True,  # 每步投影回流形 / 切空间
    }

    def __init__(self, **kwargs):
        unknown = sorted(set(kwargs) - set(self.defaults))
        if unknown:
            raise ConfigError(f"unknown numerics keys: {', '.join(unknown)}")

        self.params = dict(self.defaults)
        for key in self.defaults:
            if key in kwargs:
                self.params[key] = kwargs[key]

        for key in ("fd_step_first", "fd_step_second"):
            self.params[key] = float(self.params[key])
            if not self.params[key] > 0:
                raise ConfigError(f"{key} must be positive")
        self.params["rk4_steps_per_unit"] = int(self.params["rk4_steps_per_unit"])
        if self.params["rk4_steps_per_unit"] < 1:
            raise ConfigError("rk4_steps_per_unit must be at least 1")
        self.params["richardson"] = bool(self.params["richardson"])
        self.params["proj_stabilize"] = bool(self.params["proj_stabilize"])

    @property
    def fd_step_first(self) -> float:
        """h1"""
        return self.params["fd_step_first"]

    @property
    def fd_step_second(self) -> float:
        """h2"""
        return self.params["fd_step_second"]

    @property
    def rk4_steps_per_unit(self) -> int:
        """每单位时间的 RK4 步数"""
        return self.params["rk4_steps_per_unit"]

    @property
    def richardson(self) -> bool:
        """是否外推"""
        return self.params["richardson"]

    @property
    def proj_stabilize(self) -> bool:
        """是否投影稳定"""
        return self.params["proj_stabilize"]

    def steps_for(self, duration: float) -> int:
        """积分区间对应的默认步数"""
        return max(2, math.ceil(self.rk4_steps_per_unit * abs(duration)))

    def replace(self, **kwargs) -> NumericsConfig:
        """复制并覆盖部分参数"""
        return NumericsConfig(**{**self.params, **kwargs})

    def as_dict(self) -> dict:
        """导出"""
        return dict(self.params)

    def __repr__(self) -> str:
        return f"NumericsConfig({self.params!r})"


DEFAULT_NUMERICS = NumericsConfig()


def resolve_numerics(numerics: Optional[NumericsConfig]) -> NumericsConfig:
    """None 时取默认参数"""
    return DEFAULT_NUMERICS if numerics is None else numerics


@dataclass(frozen=True)
class MetricField:
    """
    度量场 q -> G(q), 作用在环境坐标的切向量上
    """
    manifold: SphereProduct
    gram_fn: Callable[[np.ndarray], np.ndarray]
    descriptor: str = "reference"
    # G 为常数单位阵, 即诱导的圆度量
    flat_ambient: bool = False

    def gram(self, q: np.ndarray) -> np.ndarray:
        """环境 Gram 矩阵"""
        return np.asarray(self.gram_fn(q), dtype=float)

    def inner(self, q: np.ndarray, a: Vector, b: Vector) -> float:
        """g_q(a, b)"""
        return float(a @ self.gram(q) @ b)

    def norm(self, q: np.ndarray, a: Vector) -> float:
        """g_q 范数"""
        return math.sqrt(max(self.inner(q, a, a), 0.0))

    def tangent_gram(self, q: np.ndarray) -> np.ndarray:
        """切空间标准正交基下的 Gram 矩阵"""
        basis = self.manifold.tangent_basis(q)
        return basis.T @ self.gram(q) @ basis

    def min_eigenvalue(self, q: np.ndarray) -> float:
        """切空间上的最小特征值"""
        return float(scipy.linalg.eigvalsh(self.tangent_gram(q))[0])


def flat_metric(manifold: SphereProduct,
                descriptor: str = "reference") -> MetricField:
    """
    环境欧氏度量诱导的圆度量
    """
    identity = np.eye(manifold.ambient_dim)
    return MetricField(manifold, lambda _q: identity, descriptor, True)


def central_differences(func: Callable[[np.ndarray], np.ndarray],
                        dim: int,
                        step: float,
                        richardson: bool = False) -> np.ndarray:
    """
    沿每个坐标方向的中心差分, out[i] = d func / d y_i (y = 0)
    """

    def level(h: float) -> np.ndarray:
        return np.array([(func(h * e) - func(-h * e)) / (2 * h)
                         for e in np.eye(dim)])

    coarse = level(step)
    if not richardson:
        return coarse
    return (4 * level(step / 2) - coarse) / 3


class LocalGeometry:
    """
    以 point 为中心的坐标卡上的局部几何量
    """

    def __init__(self,
                 metric: MetricField,
                 point: np.ndarray,
                 numerics: Optional[NumericsConfig] = None):
        self.metric = metric
        self.point = np.asarray(point, dtype=float)
        self.numerics = resolve_numerics(numerics)
        self.chart = metric.manifold.chart(self.point)

    @property
    def basis(self) -> np.ndarray:
        """坐标卡在中心处的雅可比, 即切空间的欧氏正交基"""
        return self.chart.basis

    @property
    def dim(self) -> int:
        """流形维数"""
        return self.basis.shape[1]

    def chart_metric(self, y: np.ndarray) -> np.ndarray:
        """拉回度量 g_ij(y) = J^T G J"""
        jac = self.chart.jacobian(y)
        return jac.T @ self.metric.gram(self.chart.point(y)) @ jac

    @cached_property
    def gram0(self) -> np.ndarray:
        """中心处的 g_ij"""
        gram = self.chart_metric(np.zeros(self.dim))
        if scipy.linalg.eigvalsh(gram)[0] <= MIN_EIGENVALUE:
            raise SingularMetricError(
                f"metric {self.metric.descriptor} is singular at the point")
        return gram

    @cached_property
    def gram0_inverse(self) -> np.ndarray:
        """g^ij"""
        return np.linalg.inv(self.gram0)

    def christoffel_at(self, y: np.ndarray) -> np.ndarray:
        """
        Γ^l_ij(y), 度量一阶导数用步长 h1
        """
        gram = self.chart_metric(y)
        # dg[m, i, j] = d_m g_ij
        dg = central_differences(lambda d: self.chart_metric(y + d), self.dim,
                                 self.numerics.fd_step_first,
                                 self.numerics.richardson)
        first_kind = 0.5 * (dg + dg.transpose(1, 0, 2) - dg.transpose(1, 2, 0))
        gamma = np.einsum("lm,ijm->lij", np.linalg.inv(gram), first_kind)
        return 0.5 * (gamma + gamma.transpose(0, 2, 1))

    @cached_property
    def christoffel(self) -> np.ndarray:
        """中心处的 Γ^l_ij"""
        _ = self.gram0
        return self.christoffel_at(np.zeros(self.dim))

    @cached_property
    def riemann(self) -> np.ndarray:
        """
        R^l_ijk = d_i Γ^l_jk - d_j Γ^l_ik + Γ^l_im Γ^m_jk - Γ^l_jm Γ^m_ik
        """
        gamma = self.christoffel
        # dgamma[i, l, j, k] = d_i Γ^l_jk
        dgamma = central_differences(self.christoffel_at, self.dim,
                                     self.numerics.fd_step_second,
                                     self.numerics.richardson)
        out = dgamma.transpose(1, 0, 2, 3) - dgamma.transpose(1, 2, 0, 3)
        out += np.einsum("lim,mjk->lijk", gamma, gamma)
        out -= np.einsum("ljm,mik->lijk", gamma, gamma)
        return out

    def components(self, v: Vector) -> np.ndarray:
        """切向量在中心处的坐标分量"""
        return self.basis.T @ v

    def inner(self, a: Vector, b: Vector) -> float:
        """中心处的 g(a, b)"""
        return self.metric.inner(self.point, a, b)

    def riemann_vector(self, x: Vector, y: Vector, z: Vector) -> Vector:
        """R(X, Y)Z, 环境坐标"""
        comps = np.einsum("lijk,i,j,k->l", self.riemann, self.components(x),
                          self.components(y), self.components(z))
        return self.basis @ comps

    def riemann4(self, x: Vector, y: Vector, z: Vector, w: Vector) -> float:
        """R(X, Y, Z, W) = g(R(X, Y)Z, W)"""
        return self.inner(self.riemann_vector(x, y, z), w)

    def sectional(self, x: Vector, y: Vector, reduced: bool = False) -> float:
        """
        截面曲率, unreduced 即 R(X, Y, Y, X)
        """
        value = self.riemann4(x, y, y, x)
        if not reduced:
            return value
        det = self.inner(x, x) * self.inner(y, y) - self.inner(x, y)**2
        if det < DEGENERATE_PLANE_DET:
            raise DegeneratePlaneError(det)
        return value / det

    def connection(self, a: Vector, b: Vector) -> Vector:
        """Christoffel 项 E Γ(E^T a, E^T b)"""
        return self.basis @ np.einsum("lij,i,j->l", self.christoffel,
                                      self.components(a), self.components(b))

    def covariant_derivative(self,
                             field: Callable[[np.ndarray], Vector],
                             v: Vector,
                             step: Optional[float] = None) -> Vector:
        """
        ∇_v W, W 为环境坐标给出的切向量场 q -> W(q)
        """
        step = self.numerics.fd_step_first if step is None else step
        direction = self.components(v)
        speed = float(np.linalg.norm(direction))
        base = self.components(field(self.point))
        if speed == 0.0:
            return np.zeros_like(self.point)
        direction = direction / speed

        def comps(s: float) -> np.ndarray:
            y = s * direction
            return self.chart.components(y, field(self.chart.point(y)))

        def derivative(h: float) -> np.ndarray:
            return (comps(h) - comps(-h)) / (2 * h)

        deriv = derivative(step)
        if self.numerics.richardson:
            deriv = (4 * derivative(step / 2) - deriv) / 3
        corr = np.einsum("lij,i,j->l", self.christoffel, direction, base)
        return speed * (self.basis @ (deriv + corr))

    def differential(self, func: Callable[[np.ndarray], float]) -> np.ndarray:
        """标量函数的坐标微分 d_i f"""
        return central_differences(lambda d: np.asarray(func(self.chart.point(d))),
                                   self.dim, self.numerics.fd_step_first,
                                   self.numerics.richardson)

    def gradient(self, func: Callable[[np.ndarray], float]) -> Vector:
        """∇f, 环境坐标"""
        return self.basis @ (self.gram0_inverse @ self.differential(func))

    def hessian(self, func: Callable[[np.ndarray], float]) -> np.ndarray:
        """
        Hess f = d_i d_j f - Γ^l_ij d_l f, 对称化
        """
        h = self.numerics.fd_step_second
        eye = np.eye(self.dim)
        values = lambda y: float(func(self.chart.point(y)))
        second = np.empty((self.dim, self.dim))
        for i in range(self.dim):
            for j in range(i, self.dim):
                ei, ej = h * eye[i], h * eye[j]
                second[i, j] = (values(ei + ej) - values(ei - ej) -
                                values(-ei + ej) + values(-ei - ej)) / (4 * h * h)
                second[j, i] = second[i, j]
        hess = second - np.einsum("lij,l->ij", self.christoffel,
                                  self.differential(func))
        return 0.5 * (hess + hess.T)

    def hessian_form(self, func: Callable[[np.ndarray], float], x: Vector,
                     y: Vector) -> float:
        """Hess f(X, Y)"""
        return float(self.components(x) @ self.hessian(func) @ self.components(y))


def christoffel(metric: MetricField,
                p: np.ndarray,
                numerics: Optional[NumericsConfig] = None) -> np.ndarray:
    """
    以 p 为中心的坐标卡中的 Γ^k_ij
    """
    metric.manifold.check_point(p)
    return LocalGeometry(metric, p, numerics).christoffel


def riemann(metric: MetricField,
            p: np.ndarray,
            x: Vector,
            y: Vector,
            z: Vector,
            numerics: Optional[NumericsConfig] = None) -> Vector:
    """
    R(X, Y)Z = ∇_X∇_Y Z - ∇_Y∇_X Z - ∇_[X,Y] Z
    """
    metric.manifold.check_point(p)
    for vec in (x, y, z):
        metric.manifold.check_tangent(p, vec)
    return LocalGeometry(metric, p, numerics).riemann_vector(x, y, z)


def sectional(metric: MetricField,
              p: np.ndarray,
              x: Vector,
              y: Vector,
              reduced: bool = False,
              numerics: Optional[NumericsConfig] = None) -> float:
    """截面曲率"""
    metric.manifold.check_point(p)
    for vec in (x, y):
        metric.manifold.check_tangent(p, vec)
    return LocalGeometry(metric, p, numerics).sectional(x, y, reduced)


def ambient_connection(metric: MetricField,
                       q: np.ndarray,
                       numerics: Optional[NumericsConfig] = None
                       ) -> Callable[[Vector, Vector], Vector]:
    """
    Γ(a, b): 嵌入的法曲率加上坐标卡中心的 Christoffel 项
    """
    manifold = metric.manifold
    if metric.flat_ambient:
        return lambda a, b: manifold.normal_curvature(q, a, b)
    local = LocalGeometry(metric, q, numerics)
    return lambda a, b: manifold.normal_curvature(q, a, b) + local.connection(a, b)


def curvature_operator(metric: MetricField,
                       q: np.ndarray,
                       numerics: Optional[NumericsConfig] = None
                       ) -> Callable[[Vector, Vector, Vector], Vector]:
    """
    R(X, Y)Z; 圆度量用 Gauss 方程, 其余用有限差分
    """
    manifold = metric.manifold
    if not metric.flat_ambient:
        return LocalGeometry(metric, q, numerics).riemann_vector

    def gauss(x: Vector, y: Vector, z: Vector) -> Vector:
        out = np.zeros_like(q)
        for s, r in zip(manifold.slices, manifold.radii):
            out[s] = ((y[s] @ z[s]) * x[s] - (x[s] @ z[s]) * y[s]) / r**2
        return out

    return gauss


@dataclass
class Curve:
    """
    离散化的曲线, 记录初值以便重新积分
    """
    metric: MetricField
    start: np.ndarray
    velocity: np.ndarray
    duration: float
    steps: int
    times: np.ndarray
    points: np.ndarray
    velocities: np.ndarray

    @property
    def dt(self) -> float:
        """步长"""
        return self.duration / self.steps

    @property
    def end(self) -> np.ndarray:
        """终点"""
        return self.points[-1]

    def speeds(self) -> np.ndarray:
        """每个节点的 |ċ|"""
        return np.array([
            self.metric.norm(q, v) for q, v in zip(self.points, self.velocities)
        ])

    def speed_drift(self) -> float:
        """速度的相对漂移"""
        speeds = self.speeds()
        if speeds[0] == 0.0:
            return float(np.max(speeds))
        return float(np.max(np.abs(speeds - speeds[0])) / speeds[0])


@dataclass
class FieldAlongCurve:
    """
    沿曲线的向量场
    """
    curve: Curve
    values: np.ndarray
    kind: str
    derivatives: Optional[np.ndarray] = None

    def norms(self) -> np.ndarray:
        """每个节点的 g 范数"""
        return np.array([
            self.curve.metric.norm(q, w)
            for q, w in zip(self.curve.points, self.values)
        ])

    def tangency_residual(self) -> float:
        """与法空间的最大重叠"""
        manifold = self.curve.metric.manifold
        return max(
            manifold.normal_residual(q, w)
            for q, w in zip(self.curve.points, self.values))


def integrate(metric: MetricField,
              p: np.ndarray,
              v: Vector,
              duration: float,
              initial: Sequence[Vector] = (),
              law: Optional[FieldLaw] = None,
              steps: Optional[int] = None,
              numerics: Optional[NumericsConfig] = None,
              stabilizers: Optional[Sequence[Optional[Stabilizer]]] = None,
              field_metrics: Optional[Sequence[Optional[MetricField]]] = None
              ) -> tuple[Curve, list[np.ndarray]]:
    """
    RK4 同时积分测地线与沿它的向量场

    law(q, v, ws) returns the covariant derivatives ∇_v w_k; omitted means
    parallel. ``field_metrics`` lets a field use another metric's connection
    along the same curve. A negative duration integrates the geodesic of -v.
    """
    numerics = resolve_numerics(numerics)
    manifold = metric.manifold
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    if duration < 0:
        v, duration = -v, -duration
    if steps is None:
        steps = numerics.steps_for(duration)
    if steps < 2:
        raise IntegrationError(f"need at least 2 integration steps, got {steps}")

    dim = manifold.ambient_dim
    n_fields = len(initial)
    stabilizers = list(stabilizers or [None] * n_fields)
    field_metrics = [
        metric if fm is None else fm
        for fm in (field_metrics or [None] * n_fields)
    ]

    def unpack(state: np.ndarray):
        q = manifold.project(state[:dim])
        vel = manifold.tangent_project(q, state[dim:2 * dim])
        ws = [
            manifold.tangent_project(q, state[(2 + k) * dim:(3 + k) * dim])
            for k in range(n_fields)
        ]
        return q, vel, ws

    def rhs(state: np.ndarray) -> np.ndarray:
        q, vel, ws = unpack(state)
        conn = ambient_connection(metric, q, numerics)
        others = {}
        if law is None:
            forces = [np.zeros(dim)] * n_fields
        else:
            forces = law(q, vel, ws)
        parts = [vel, -conn(vel, vel)]
        for force, w, fm in zip(forces, ws, field_metrics):
            if fm is metric:
                field_conn = conn
            else:
                if id(fm) not in others:
                    others[id(fm)] = ambient_connection(fm, q, numerics)
                field_conn = others[id(fm)]
            parts.append(manifold.tangent_project(q, force) - field_conn(vel, w))
        return np.concatenate(parts)

    def stabilize(state: np.ndarray) -> np.ndarray:
        q, vel, ws = unpack(state)
        ws = [
            w if fix is None else fix(q, w) for w, fix in zip(ws, stabilizers)
        ]
        return np.concatenate([q, vel] + ws)

    state = np.concatenate([p, v] + [np.asarray(w, dtype=float) for w in initial])
    dt = duration / steps
    history = np.empty((steps + 1, state.size))
    history[0] = state
    for i in range(steps):
        k1 = rhs(state)
        k2 = rhs(state + 0.5 * dt * k1)
        k3 = rhs(state + 0.5 * dt * k2)
        k4 = rhs(state + dt * k3)
        state = state + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if numerics.proj_stabilize:
            state = stabilize(state)
        history[i + 1] = state

    logger.debug("integrated %d field(s) over T=%.4g with %d RK4 steps (%s)",
                 n_fields, duration, steps, metric.descriptor)

    curve = Curve(metric=metric,
                  start=p,
                  velocity=v,
                  duration=duration,
                  steps=steps,
                  times=np.linspace(0.0, duration, steps + 1),
                  points=history[:, :dim],
                  velocities=history[:, dim:2 * dim])
    fields = [
        history[:, (2 + k) * dim:(3 + k) * dim] for k in range(n_fields)
    ]
    return curve, fields


def geodesic(metric: MetricField,
             p: np.ndarray,
             v: Vector,
             duration: float,
             steps: Optional[int] = None,
             numerics: Optional[NumericsConfig] = None) -> Curve:
    """
    测地线 exp_p(t v), t in [0, T]
    """
    metric.manifold.check_point(p)
    metric.manifold.check_tangent(p, v)
    curve, _ = integrate(metric, p, v, duration, steps=steps, numerics=numerics)
    return curve


def parallel_transport(metric: MetricField,
                       curve: Curve,
                       w0: Vector,
                       numerics: Optional[NumericsConfig] = None
                       ) -> FieldAlongCurve:
    """
    沿测地线平行移动
    """
    metric.manifold.check_tangent(curve.start, w0)
    again, (values, ) = integrate(metric,
                                  curve.start,
                                  curve.velocity,
                                  curve.duration, [w0],
                                  steps=curve.steps,
                                  numerics=numerics)
    return FieldAlongCurve(again, values, "parallel")


def jacobi_field(metric: MetricField,
                 curve: Curve,
                 j0: Vector,
                 jprime0: Vector,
                 numerics: Optional[NumericsConfig] = None) -> FieldAlongCurve:
    """
    Jacobi 场 J'' + R(J, ċ)ċ = 0, 状态为 (J, ∇J)
    """
    metric.manifold.check_tangent(curve.start, j0)
    metric.manifold.check_tangent(curve.start, jprime0)

    def law(q, vel, ws):
        jac, jac_prime = ws
        return [jac_prime, -curvature_operator(metric, q, numerics)(jac, vel, vel)]

    again, (values, derivs) = integrate(metric,
                                        curve.start,
                                        curve.velocity,
                                        curve.duration, [j0, jprime0],
                                        law=law,
                                        steps=curve.steps,
                                        numerics=numerics)
    return FieldAlongCurve(again, values, "jacobi", derivs)


def g_orthonormal(metric: MetricField, q: np.ndarray,
                  vectors: np.ndarray) -> np.ndarray:
    """
    按 g_q 正交化列向量 (Cholesky)
    """
    gram = vectors.T @ metric.gram(q) @ vectors
    try:
        lower = scipy.linalg.cholesky(gram, lower=True)
    except np.linalg.LinAlgError as err:
        raise SingularMetricError("vectors are not g-independent") from err
    return scipy.linalg.solve_triangular(lower, vectors.T, lower=True).T


def spd_power(matrix: np.ndarray, power: float) -> np.ndarray:
    """
    对称正定矩阵的实数次幂, 用 eigh
    """
    eigvals, eigvecs = scipy.linalg.eigh(matrix)
    if eigvals[0] <= MIN_EIGENVALUE:
        raise SingularMetricError(
            f"matrix is not positive definite (min eigenvalue {eigvals[0]:.3e})")
    return (eigvecs * eigvals**power) @ eigvecs.T
