"""
Cheeger 形变: 轨道张量 P, P_t, C_t, 度量 g_t 与 g̃_t, 截面曲率公式 κ_t

Every deformed metric keeps H and the base metric and replaces the orbit
tensor P by some P':

    G' = G + G K P^{-1} (P' - P) P^{-1} K^T G
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from curvlab.errors import ParameterError
from curvlab.geometry import bundle_zoo
from curvlab.geometry.bundle_zoo import BundleInstance
from curvlab.geometry.lie_core import bracket
from curvlab.geometry.riemann_engine import (LocalGeometry, MetricField,
                                             NumericsConfig, spd_power)
from curvlab.submersion.oneill import SubmersionFrame

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OrbitTensor:
    """
    g(U*, V*) = Q(PU, V)
    """
    matrix: np.ndarray

    @property
    def eigenvalues(self) -> np.ndarray:
        """特征值, 升序"""
        return np.linalg.eigvalsh(self.matrix)

    def inverse(self) -> np.ndarray:
        """P^{-1}"""
        return np.linalg.inv(self.matrix)


@dataclass(frozen=True)
class DeformedDecomposition:
    """X̄ = X + U*(p)"""
    X: np.ndarray
    U: np.ndarray


def _check_t(t: float) -> None:
    if t < 0:
        raise ParameterError(f"deformation time must be nonnegative, got {t}")


def orbit_tensor(b: BundleInstance,
                 m: Optional[MetricField],
                 p: np.ndarray) -> OrbitTensor:
    """p 处的轨道张量"""
    b.check_point(p)
    return OrbitTensor(bundle_zoo.orbit_gram(b, p, m))


def p_t(orbit: OrbitTensor | np.ndarray, t: float) -> OrbitTensor:
    """
    P_t = P (1 + tP)^{-1}
    """
    _check_t(t)
    mat = orbit.matrix if isinstance(orbit, OrbitTensor) else np.asarray(orbit)
    out = np.linalg.solve(np.eye(len(mat)) + t * mat, mat)
    return OrbitTensor(0.5 * (out + out.T))


def decompose(b: BundleInstance, m: Optional[MetricField], p: np.ndarray,
              xbar: np.ndarray) -> DeformedDecomposition:
    """水平部分与竖直部分对应的李代数元素"""
    theta = bundle_zoo.connection_form(b, p, m)
    u = theta @ xbar
    return DeformedDecomposition(xbar - b.action_vectors(p) @ u, u)


def c_t(b: BundleInstance, m: Optional[MetricField], p: np.ndarray,
        xbar: np.ndarray, t: float) -> np.ndarray:
    """
    C_t(X + U*) = X + ((1 + tP)^{-1} U)*
    """
    _check_t(t)
    parts = decompose(b, m, p, xbar)
    orbit = bundle_zoo.orbit_gram(b, p, m)
    u = np.linalg.solve(np.eye(3) + t * orbit, parts.U)
    return parts.X + b.action_vectors(p) @ u


def c_t_inverse(b: BundleInstance, m: Optional[MetricField], p: np.ndarray,
                xbar: np.ndarray, t: float) -> np.ndarray:
    """
    C_t^{-1}(X + U*) = X + ((1 + tP) U)*
    """
    _check_t(t)
    parts = decompose(b, m, p, xbar)
    orbit = bundle_zoo.orbit_gram(b, p, m)
    return parts.X + b.action_vectors(p) @ (parts.U + t * orbit @ parts.U)


def vertical_rescaled_metric(
        b: BundleInstance, m: Optional[MetricField],
        new_orbit: Callable[[np.ndarray, np.ndarray], np.ndarray],
        descriptor: str) -> MetricField:
    """
    保持 H 与底空间度量, 把轨道张量换成 new_orbit(P, q)
    """
    m = b.reference_metric if m is None else m

    def gram(q: np.ndarray) -> np.ndarray:
        base = m.gram(q)
        cols = b.action_vectors(q)
        orbit = cols.T @ base @ cols
        inv = np.linalg.inv(orbit)
        middle = inv @ (new_orbit(orbit, q) - orbit) @ inv
        gk = base @ cols
        out = base + gk @ middle @ gk.T
        return 0.5 * (out + out.T)

    return MetricField(m.manifold, gram, descriptor, False)


def metric_gt(b: BundleInstance, m: Optional[MetricField],
              t: float) -> MetricField:
    """
    Cheeger 形变 g_t, 竖直部分 P -> P_t
    """
    _check_t(t)
    m = b.reference_metric if m is None else m
    if t == 0:
        return m
    return vertical_rescaled_metric(b, m, lambda orbit, _q: p_t(orbit, t).matrix,
                                    f"cheeger({t:g})")


def regularized_metric(b: BundleInstance, m: Optional[MetricField],
                       t: float) -> MetricField:
    """
    g̃_t = t g_t|_V + g|_H, 竖直部分 P -> t P_t
    """
    if t <= 0:
        raise ParameterError(f"regularization time must be positive, got {t}")
    return vertical_rescaled_metric(b, m,
                                    lambda orbit, _q: t * p_t(orbit, t).matrix,
                                    f"regularized({t:g})")


def _extension(frame: SubmersionFrame, vec: np.ndarray):
    """X̄ = X + U* 的延拓: X 基本, U 为固定李代数元素"""
    parts = decompose(frame.bundle, frame.metric, frame.p, vec)
    basic = bundle_zoo.basic_extension(frame.bundle, frame.p, parts.X, frame.metric)
    action = bundle_zoo.action_field(frame.bundle, parts.U)
    return parts, lambda q: basic(q) + action(q)


def z_t_term(b: BundleInstance,
             m: Optional[MetricField],
             p: np.ndarray,
             xbar: np.ndarray,
             ybar: np.ndarray,
             t: float,
             numerics: Optional[NumericsConfig] = None) -> float:
    """
    z_t = 3t |(1+tP)^{-1/2} (P ∇^v_X̄ Ȳ - X̄ g(Ȳ, Z*) - (t/2)[PU, PV])|²_Q

    X̄ g(Ȳ, Z*) = Q((D_X̄ P) V, Z) for the extension Ȳ = Y + V*; it vanishes
    when P is constant.
    """
    _check_t(t)
    if t == 0:
        return 0.0
    frame = SubmersionFrame(b, m, p, numerics)
    metric = frame.metric
    x_parts = decompose(b, metric, p, xbar)
    y_parts, y_field = _extension(frame, ybar)
    orbit = frame.orbit
    vertical_nabla = frame.algebra(frame.nabla(y_field, xbar))
    drift = frame.directional(
        lambda q: b.action_vectors(q).T @ metric.gram(q) @ y_field(q), xbar)
    vec = (orbit @ vertical_nabla - drift -
           0.5 * t * bracket(orbit @ x_parts.U, orbit @ y_parts.U))
    scaled = spd_power(np.eye(3) + t * orbit, -0.5) @ vec
    return float(3 * t * scaled @ scaled)


def z_t_max_form(b: BundleInstance,
                 m: Optional[MetricField],
                 p: np.ndarray,
                 xbar: np.ndarray,
                 ybar: np.ndarray,
                 t: float,
                 numerics: Optional[NumericsConfig] = None) -> float:
    """
    z_t = 3t max_Z (dw_Z(X̄, Ȳ) + (t/2) Q([PU, PV], Z))² / Q((1+tP)Z, Z)

    w_Z = ½ g(·, Z*); the maximum is 3t β^T (1 + tP)^{-1} β.
    """
    _check_t(t)
    if t == 0:
        return 0.0
    frame = SubmersionFrame(b, m, p, numerics)
    x_parts, x_field = _extension(frame, xbar)
    y_parts, y_field = _extension(frame, ybar)
    metric = frame.metric
    lie = frame.nabla(y_field, xbar) - frame.nabla(x_field, ybar)

    beta = np.zeros(3)
    for k in range(3):
        z_field = bundle_zoo.action_field(b, np.eye(3)[k])
        w_of_y = lambda q: 0.5 * metric.inner(q, y_field(q), z_field(q))
        w_of_x = lambda q: 0.5 * metric.inner(q, x_field(q), z_field(q))
        beta[k] = (frame.directional(w_of_y, xbar) -
                   frame.directional(w_of_x, ybar) -
                   0.5 * frame.inner(lie, z_field(p)))
    orbit = frame.orbit
    beta += 0.5 * t * bracket(orbit @ x_parts.U, orbit @ y_parts.U)
    return float(3 * t * beta @ np.linalg.solve(np.eye(3) + t * orbit, beta))


def kappa_t(b: BundleInstance,
            m: Optional[MetricField],
            p: np.ndarray,
            xbar: np.ndarray,
            ybar: np.ndarray,
            t: float,
            numerics: Optional[NumericsConfig] = None) -> float:
    """
    κ_t = κ_0 + (t³/4)|[PU, PV]|²_Q + z_t, κ_0 取自有限差分
    """
    _check_t(t)
    m = b.reference_metric if m is None else m
    kappa0 = LocalGeometry(m, p, numerics).sectional(xbar, ybar)
    if t == 0:
        return kappa0
    orbit = bundle_zoo.orbit_gram(b, p, m)
    u = decompose(b, m, p, xbar).U
    v = decompose(b, m, p, ybar).U
    lie = bracket(orbit @ u, orbit @ v)
    correction = t**3 / 4 * float(lie @ lie)
    return kappa0 + correction + z_t_term(b, m, p, xbar, ybar, t, numerics)


def kappa_t_oracle(b: BundleInstance,
                   m: Optional[MetricField],
                   p: np.ndarray,
                   xbar: np.ndarray,
                   ybar: np.ndarray,
                   t: float,
                   numerics: Optional[NumericsConfig] = None) -> float:
    """
    R_{g_t}(C_t^{-1} x̄, C_t^{-1} ȳ, C_t^{-1} ȳ, C_t^{-1} x̄), 有限差分
    """
    x_t = c_t_inverse(b, m, p, xbar, t)
    y_t = c_t_inverse(b, m, p, ybar, t)
    return LocalGeometry(metric_gt(b, m, t), p, numerics).sectional(x_t, y_t)


def limit_dual_a(b: BundleInstance,
                 m: Optional[MetricField],
                 p: np.ndarray,
                 x: np.ndarray,
                 numerics: Optional[NumericsConfig] = None) -> np.ndarray:
    """
    V -> A*_X (P^{-1} V), 以李代数坐标表示, N x 3
    """
    frame = SubmersionFrame(b, m, p, numerics)
    inv = np.linalg.inv(frame.orbit)
    return np.column_stack(
        [frame.a_star(x, frame.star(inv @ e)) for e in np.eye(3)])


def base_curvature_family(b: BundleInstance,
                          m: Optional[MetricField],
                          p: np.ndarray,
                          x: np.ndarray,
                          y: np.ndarray,
                          t: float,
                          reduced: bool = True,
                          numerics: Optional[NumericsConfig] = None) -> float:
    """
    K_g(X, Y) + 3t|(1+tP)^{-1/2} P A_X Y|²_Q + 3|(1+tP)^{-1/2} A_X Y|²_g

    t = math.inf gives the limit K_g(X, Y) + 3 Q(P a, a), a = θ(A_X Y).
    """
    _check_t(t)
    frame = SubmersionFrame(b, m, p, numerics)
    orbit = frame.orbit
    a = frame.algebra(frame.a_tensor(x, y))
    value = frame.local.sectional(x, y)
    if math.isinf(t):
        value += 3 * float(a @ orbit @ a)
    else:
        inv = np.linalg.inv(np.eye(3) + t * orbit)
        pa = orbit @ a
        value += 3 * t * float(pa @ inv @ pa) + 3 * float(a @ orbit @ inv @ a)
    if not reduced:
        return value
    det = frame.inner(x, x) * frame.inner(y, y) - frame.inner(x, y)**2
    return value / det
