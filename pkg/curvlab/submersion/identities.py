"""
曲率恒等式与不等式的数值检查

CDR margins, WNN, good triples, the identities that hold for totally geodesic
fibers, the dual holonomy K identity and the dual-inverse relation between
two adapted metrics. Checks that need totally geodesic fibers measure |S|
first and raise HypothesisViolatedError above the threshold.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from curvlab.errors import NotAdaptedError, ParameterError
from curvlab.geometry import bundle_zoo
from curvlab.geometry.bundle_zoo import BundleInstance
from curvlab.geometry.lie_core import sphere_grid
from curvlab.geometry.riemann_engine import (Curve, LocalGeometry, MetricField,
                                             NumericsConfig, ambient_connection,
                                             geodesic, integrate, jacobi_field,
                                             resolve_numerics)
from curvlab.submersion import holonomy
from curvlab.submersion.oneill import (SubmersionFrame, VertizontalFrame,
                                       fatness_check, kernel_a_x)

logger = logging.getLogger(__name__)

STENCIL = 0.01
ORTHONORMAL_TOL = 1e-8
ADAPTED_TOL = 1e-8


@dataclass
class CdrForms:
    """
    u -> margin(u) 的二次型: lhs u^T Q u, rhs (w^T u)²
    """
    lhs: np.ndarray
    rhs: np.ndarray

    def margin(self, u: np.ndarray) -> float:
        """单个 u 的 margin"""
        return float(u @ self.lhs @ u - (self.rhs @ u)**2)

    def margins(self, grid: np.ndarray) -> np.ndarray:
        """网格上每一行的 margin"""
        return (np.einsum("ki,ij,kj->k", grid, self.lhs, grid) -
                (grid @ self.rhs)**2)


@dataclass
class TappResiduals:
    """基本张量恒等式的三个残差, 以及另一种写法的残差 (只记录)"""
    first: float
    second: float
    third: Optional[float]
    intro_variant: float

    def as_tuple(self) -> tuple:
        """(first, second, third)"""
        return (self.first, self.second, self.third)


def icosphere_grid(subdivisions: int = 2) -> np.ndarray:
    """李代数单位球面上的方向网格, 默认 162 个"""
    return sphere_grid(subdivisions)


def _plane_det(frame: SubmersionFrame, x: np.ndarray, y: np.ndarray) -> float:
    return frame.inner(x, x) * frame.inner(y, y) - frame.inner(x, y)**2


def cdr_forms(b: BundleInstance,
              m: Optional[MetricField],
              p: np.ndarray,
              x: np.ndarray,
              y: np.ndarray,
              base_curvature: Optional[float] = None,
              numerics: Optional[NumericsConfig] = None) -> CdrForms:
    """
    K_B(X, Y)|A*_X U*|² 与 g(U*, (∇_X A)_X Y)² 关于 u 的二次型
    """
    frame = SubmersionFrame(b, m, p, numerics)
    curvature = b.base_curvature if base_curvature is None else base_curvature
    k_base = curvature * _plane_det(frame, x, y)
    duals = np.column_stack([frame.a_star(x, col) for col in frame.action.T])
    lhs = k_base * duals.T @ frame.gram @ duals
    rhs = frame.action.T @ frame.gram @ frame.nabla_a(x, y)
    return CdrForms(0.5 * (lhs + lhs.T), rhs)


def cdr_margin(b: BundleInstance,
               m: Optional[MetricField],
               p: np.ndarray,
               x: np.ndarray,
               y: np.ndarray,
               u: np.ndarray,
               base_curvature: Optional[float] = None,
               numerics: Optional[NumericsConfig] = None) -> float:
    """
    K_B(X, Y)|A*_X U*|² - g(U*, (∇_X A)_X Y)²
    """
    return cdr_forms(b, m, p, x, y, base_curvature, numerics).margin(np.asarray(u))


def cdr_min_margin(b: BundleInstance,
                   m: Optional[MetricField],
                   p: np.ndarray,
                   x: np.ndarray,
                   y: np.ndarray,
                   grid: Optional[np.ndarray] = None,
                   base_curvature: Optional[float] = None,
                   numerics: Optional[NumericsConfig] = None) -> float:
    """网格上 margin 的最小值"""
    grid = icosphere_grid() if grid is None else grid
    forms = cdr_forms(b, m, p, x, y, base_curvature, numerics)
    return float(np.min(forms.margins(grid)))


def cdr_original_margin(b: BundleInstance,
                        m: Optional[MetricField],
                        p: np.ndarray,
                        x: np.ndarray,
                        y: np.ndarray,
                        u: np.ndarray,
                        basis: Optional[np.ndarray] = None,
                        base_curvature: Optional[float] = None,
                        numerics: Optional[NumericsConfig] = None) -> float:
    """
    K_B(X, Y) Σ_k Q(u, Ω(X, X_k))² - Q(u, (∇_X Ω)(X, Y))²

    basis columns are horizontal lifts of an orthonormal base frame;
    (∇_X Ω)(X, Y) = -2 θ((∇_X A)_X Y).
    """
    frame = SubmersionFrame(b, m, p, numerics)
    basis = frame.horizontal_on if basis is None else basis
    gram = basis.T @ frame.gram @ basis
    if np.max(np.abs(gram - np.eye(gram.shape[0]))) > ORTHONORMAL_TOL:
        raise ParameterError("base frame is not orthonormal")
    curvature = b.base_curvature if base_curvature is None else base_curvature
    k_base = curvature * _plane_det(frame, x, y)
    u = np.asarray(u, dtype=float)
    total = sum(
        float(u @ frame.connection_curvature(x, xk))**2 for xk in basis.T)
    nabla_omega = -2 * frame.algebra(frame.nabla_a(x, y))
    return k_base * total - float(u @ nabla_omega)**2


def wnn_rhs(frame: SubmersionFrame, x: np.ndarray, v: np.ndarray) -> float:
    """⟨(∇_X A*)_X V + A*_X S_X V, A*_X V⟩"""
    dual = frame.a_star(x, v)
    return frame.inner(frame.nabla_a_star(x, v) + frame.a_star(x, frame.s_tensor(x, v)),
                       dual)


def wnn_residual(b: BundleInstance,
                 m: Optional[MetricField],
                 p: np.ndarray,
                 x: np.ndarray,
                 v: np.ndarray,
                 tau: float,
                 numerics: Optional[NumericsConfig] = None) -> float:
    """
    τ|X|²|A*_X V|² - ⟨(∇_X A*)_X V + A*_X S_X V, A*_X V⟩
    """
    if tau <= 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    frame = SubmersionFrame(b, m, p, numerics)
    dual = frame.a_star(x, v)
    return (tau * frame.inner(x, x) * frame.inner(dual, dual) -
            wnn_rhs(frame, x, v))


def _stencil(b: BundleInstance, m: MetricField, p: np.ndarray, x: np.ndarray,
             v: np.ndarray, s_sign: float, delta: float,
             numerics: NumericsConfig):
    """
    沿 exp(tX), t in {-δ, 0, δ} 的点, 速度与竖直场 (holonomy 或对偶)
    """
    steps = numerics.steps_for(delta)
    points, velocities, fields = [], [], []
    for sign in (-1.0, 1.0):
        curve = geodesic(m, p, sign * x, delta, steps=steps, numerics=numerics)
        (values, ) = holonomy.vertical_fields(b, m, curve, [v], [s_sign],
                                              numerics=numerics)
        points.append(curve.end)
        velocities.append(sign * curve.velocities[-1])
        fields.append(values[-1])
    return (np.array([points[0], p, points[1]]),
            np.array([velocities[0], x, velocities[1]]),
            np.array([fields[0], v, fields[1]]))


def _nabla_from_stencil(m: MetricField, p: np.ndarray, x: np.ndarray,
                        values: np.ndarray, delta: float,
                        numerics: NumericsConfig) -> np.ndarray:
    """∇_X W ≈ (W(δ) - W(-δ)) / 2δ + Γ(X, W(0))"""
    conn = ambient_connection(m, p, numerics)
    return (values[2] - values[0]) / (2 * delta) + conn(x, values[1])


def varfim_residual(b: BundleInstance,
                    m: Optional[MetricField],
                    p: np.ndarray,
                    x: np.ndarray,
                    v: np.ndarray,
                    delta: float = STENCIL,
                    numerics: Optional[NumericsConfig] = None) -> float:
    """
    WNN 右端与沿 holonomy 场的导数 ½X|A*_X V|² + 2⟨A*_X S_X V, A*_X V⟩ 之差,
    以及与沿对偶 holonomy 场的 ½X|A*_X V|² 之差, 取较大者
    """
    numerics = resolve_numerics(numerics)
    m = b.reference_metric if m is None else m
    frame = SubmersionFrame(b, m, p, numerics)
    tensor_path = wnn_rhs(frame, x, v)
    dual = frame.a_star(x, v)
    s_term = 2 * frame.inner(frame.a_star(x, frame.s_tensor(x, v)), dual)

    residual = 0.0
    for s_sign, extra in ((-1.0, s_term), (1.0, 0.0)):
        points, velocities, fields = _stencil(b, m, p, x, v, s_sign, delta, numerics)
        squares = [
            frame.moved(q).norm(frame.moved(q).a_star(vel, w))**2
            for q, vel, w in zip(points[::2], velocities[::2], fields[::2])
        ]
        derivative = (squares[1] - squares[0]) / (2 * delta)
        residual = max(residual, abs(tensor_path - (0.5 * derivative + extra)))
    return residual


def gronwall_check(b: BundleInstance,
                   m: Optional[MetricField],
                   p: np.ndarray,
                   x: np.ndarray,
                   nu0: np.ndarray,
                   duration: float,
                   tau: float,
                   checkpoints: int = 11,
                   numerics: Optional[NumericsConfig] = None) -> float:
    """
    u(t) = |A*_ċ ν(t)|² ≤ u(0) e^{2τt}, 返回最大的违反量
    """
    numerics = resolve_numerics(numerics)
    m = b.reference_metric if m is None else m
    curve = geodesic(m, p, x, duration, numerics=numerics)
    field = holonomy.dual_holonomy_field(b, m, curve, nu0, numerics)
    indices = np.linspace(0, curve.steps, checkpoints).round().astype(int)
    values = []
    for i in indices:
        frame = SubmersionFrame(b, m, curve.points[i], numerics)
        values.append(frame.norm(frame.a_star(curve.velocities[i], field.values[i]))**2)
    values = np.array(values)
    if values[0] == 0.0:
        return float(np.max(values))
    bound = values[0] * np.exp(2 * tau * curve.times[indices])
    return float(max(0.0, np.max(values - bound)))


def check_basic_astar(b: BundleInstance,
                      m: Optional[MetricField],
                      p: np.ndarray,
                      x: np.ndarray,
                      v: np.ndarray,
                      duration: float,
                      checkpoints: int = 5,
                      delta: float = STENCIL,
                      numerics: Optional[NumericsConfig] = None) -> float:
    """
    沿竖直测地线 γ, X 为基本场: max |∇_γ̇ (A*_X γ̇) + A*_{A*_X γ̇} γ̇|
    """
    numerics = resolve_numerics(numerics)
    m = b.reference_metric if m is None else m
    SubmersionFrame(b, m, p, numerics).require_totally_geodesic()
    curve = geodesic(m, p, v, duration, numerics=numerics)
    basic = holonomy.basic_field(b, m, curve, x, numerics)
    width = max(1, round(delta / curve.dt))
    lo, hi = width, curve.steps - width
    if hi < lo:
        raise ParameterError("vertical geodesic is too short for the stencil")
    centers = np.unique(np.linspace(lo, hi, checkpoints).round().astype(int))

    def dual_at(i: int) -> np.ndarray:
        frame = SubmersionFrame(b, m, curve.points[i], numerics)
        return frame.a_star(basic.values[i], curve.velocities[i])

    residual = 0.0
    for i in centers:
        q, vel = curve.points[i], curve.velocities[i]
        frame = SubmersionFrame(b, m, q, numerics)
        dual = dual_at(i)
        deriv = (dual_at(i + width) - dual_at(i - width)) / (2 * width * curve.dt)
        nabla = deriv + ambient_connection(m, q, numerics)(vel, dual)
        value = nabla + frame.a_star(dual, vel)
        residual = max(residual, frame.norm(value))
    return residual


def good_triple_mismatch(b: BundleInstance,
                         m: Optional[MetricField],
                         p: np.ndarray,
                         x: np.ndarray,
                         v: np.ndarray,
                         initial_derivative: np.ndarray,
                         s_max: float,
                         t_max: float,
                         grid: int = 32,
                         numerics: Optional[NumericsConfig] = None) -> float:
    """
    max |exp_{σ(s)}(t V(s)) - exp_{τ(t)}(s X(t))| 在 [0, s_max] x [0, t_max] 网格上
    """
    numerics = resolve_numerics(numerics)
    m = b.reference_metric if m is None else m
    if grid < 2:
        raise ParameterError("good triple grid needs at least 2 points per side")

    def aligned_steps(length: float) -> int:
        per_cell = max(1, math.ceil(numerics.steps_for(length) / (grid - 1)))
        return per_cell * (grid - 1)

    def surface(first: np.ndarray, second: np.ndarray, outer: float,
                inner: float) -> np.ndarray:
        steps_outer, steps_inner = aligned_steps(outer), aligned_steps(inner)
        stride_outer, stride_inner = steps_outer // (grid - 1), steps_inner // (grid - 1)
        base_curve = geodesic(m, p, first, outer, steps=steps_outer, numerics=numerics)
        jac = jacobi_field(m, base_curve, second, initial_derivative, numerics)
        out = np.empty((grid, grid, p.size))
        for i in range(grid):
            node = i * stride_outer
            q, w = base_curve.points[node], jac.values[node]
            ruled, _ = integrate(m, q, w, inner, steps=steps_inner, numerics=numerics)
            out[i] = ruled.points[::stride_inner]
        return out

    # rows: s, columns: t
    along_x = surface(x, v, s_max, t_max)
    along_v = surface(v, x, t_max, s_max).transpose(1, 0, 2)
    return float(np.max(np.linalg.norm(along_x - along_v, axis=2)))


def check_good_triple(b: BundleInstance,
                      m: Optional[MetricField],
                      p: np.ndarray,
                      x: np.ndarray,
                      v: np.ndarray,
                      s_max: float,
                      t_max: float,
                      grid: int = 32,
                      control: bool = False,
                      numerics: Optional[NumericsConfig] = None) -> float:
    """
    {X, V, -A*_X V} 的双直纹面失配; control=True 时取 0 作为初始导数
    """
    frame = SubmersionFrame(b, m, p, numerics)
    frame.require_totally_geodesic()
    derivative = np.zeros_like(p) if control else -frame.a_star(x, v)
    return good_triple_mismatch(b, frame.metric, p, x, v, derivative, s_max, t_max,
                                grid, numerics)


def _tapp_covariant(b: BundleInstance, m: MetricField, frame: VertizontalFrame,
                    delta: float, numerics: NumericsConfig) -> dict:
    """沿 exp(tX) 的 holonomy 延拓做中心差分的几个协变导数"""
    p, x, v = frame.p, frame.X, frame.V
    points, velocities, fields = _stencil(b, m, p, x, v, -1.0, delta, numerics)
    y_field = bundle_zoo.basic_extension(b, p, frame.Y, m)
    frames = [SubmersionFrame(b, m, q, numerics) for q in points]

    along_y = np.array([f.a_star(y_field(q), w) for f, q, w in zip(frames, points, fields)])
    along_x = np.array([f.a_star(vel, w) for f, vel, w in zip(frames, velocities, fields)])
    along_xx = np.array([f.a_star(d, w) for f, d, w in zip(frames, along_x, fields)])
    return {
        "y": _nabla_from_stencil(m, p, x, along_y, delta, numerics),
        "x": _nabla_from_stencil(m, p, x, along_x, delta, numerics),
        "xx": _nabla_from_stencil(m, p, x, along_xx, delta, numerics),
    }


def check_theorem_tapp(b: BundleInstance,
                       m: Optional[MetricField],
                       frame: VertizontalFrame,
                       delta: float = STENCIL,
                       numerics: Optional[NumericsConfig] = None) -> TappResiduals:
    """
    R(X, A*_X V, A*_X V, V) = 0
    R(X, V, A*_X V, Y) = ⟨∇_X A*_Y V, A*_X V⟩
    R(X, V, A*_X V, X) = 0 (胖时)
    """
    numerics = resolve_numerics(numerics)
    m = b.reference_metric if m is None else m
    sub = SubmersionFrame(b, m, frame.p, numerics)
    sub.require_totally_geodesic()
    local = sub.local
    x, y, v = frame.X, frame.Y, frame.V
    dual = sub.a_star(x, v)

    first = abs(local.riemann4(x, dual, dual, v))
    derivs = _tapp_covariant(b, m, frame, delta, numerics)
    curv = local.riemann4(x, v, dual, y)
    second = abs(curv - sub.inner(derivs["y"], dual))

    third = None
    if fatness_check(b, m, frame.p, v, numerics).is_fat:
        third = abs(local.riemann4(x, v, dual, x))

    variant = sub.a_star(sub.horizontal(derivs["x"]), v) - derivs["xx"]
    intro = abs(curv - sub.inner(variant, y))
    logger.debug("tapp residuals %.3e %.3e %s (variant %.3e)", first, second,
                 "n/a" if third is None else f"{third:.3e}", intro)
    return TappResiduals(first, second, third, intro)


def check_corollary_flat(b: BundleInstance,
                         m: Optional[MetricField],
                         frame: VertizontalFrame,
                         numerics: Optional[NumericsConfig] = None
                         ) -> tuple[float, Optional[float]]:
    """
    (1) R(X, Y, Y, V) = 0, Y ∈ ker A_X
    (2) 胖时对任意基本 Y 成立
    """
    m = b.reference_metric if m is None else m
    sub = SubmersionFrame(b, m, frame.p, numerics)
    sub.require_totally_geodesic()
    local = sub.local
    x, v = frame.X, frame.V
    kernel = kernel_a_x(b, m, frame.p, x, numerics)
    first = max((abs(local.riemann4(x, y, y, v)) for y in kernel.T), default=0.0)
    second = None
    if fatness_check(b, m, frame.p, v, numerics).is_fat:
        second = abs(local.riemann4(x, frame.Y, frame.Y, v))
    return first, second


def check_k_identity(b: BundleInstance,
                     m: Optional[MetricField],
                     p: np.ndarray,
                     x: np.ndarray,
                     v: np.ndarray,
                     duration: float,
                     checkpoints: int = 5,
                     delta: float = STENCIL,
                     numerics: Optional[NumericsConfig] = None) -> float:
    """
    K(ċ, ν) = ½ (|ν|²)'' - 3|S_ċ ν|² + |A*_ċ ν|², ν 为对偶 holonomy 场
    """
    numerics = resolve_numerics(numerics)
    m = b.reference_metric if m is None else m
    curve = geodesic(m, p, x, duration, numerics=numerics)
    field = holonomy.dual_holonomy_field(b, m, curve, v, numerics)
    norms = field.norms()**2
    width = max(1, round(delta / curve.dt))
    lo, hi = width, curve.steps - width
    if hi < lo:
        raise ParameterError("geodesic is too short for the stencil")
    centers = np.unique(np.linspace(lo, hi, checkpoints).round().astype(int))
    spacing = width * curve.dt

    residual = 0.0
    for i in centers:
        q, vel, nu = curve.points[i], curve.velocities[i], field.values[i]
        frame = SubmersionFrame(b, m, q, numerics)
        second = (norms[i + width] - 2 * norms[i] + norms[i - width]) / spacing**2
        rhs = (0.5 * second - 3 * frame.norm(frame.s_tensor(vel, nu))**2 +
               frame.norm(frame.a_star(vel, nu))**2)
        lhs = frame.local.sectional(vel, nu)
        residual = max(residual, abs(lhs - rhs))
    return residual


def check_adapted(b: BundleInstance, m1: MetricField, m2: MetricField,
                  points: list[np.ndarray]) -> None:
    """
    两个度量在 H 上一致, 且在 m2 下 V ⊥ H
    """
    for q in points:
        basis = bundle_zoo.horizontal_basis(b, q, m1)
        g1, g2 = m1.gram(q), m2.gram(q)
        same = np.max(np.abs(basis.T @ (g1 - g2) @ basis))
        cross = np.max(np.abs(b.action_vectors(q).T @ g2 @ basis))
        if max(same, cross) > ADAPTED_TOL:
            raise NotAdaptedError(
                f"metrics {m1.descriptor} and {m2.descriptor} are not adapted "
                f"to the same horizontal distribution ({max(same, cross):.3e})")


def dual_inv_check(b: BundleInstance,
                   m1: Optional[MetricField],
                   m2: Optional[MetricField],
                   p: np.ndarray,
                   x: np.ndarray,
                   nu0: np.ndarray,
                   duration: float,
                   checkpoints: int = 11,
                   numerics: Optional[NumericsConfig] = None) -> float:
    """
    ν' 为 m2 的对偶 holonomy 场, ν = (P1^{-1} P2 θ(ν'))* 为 m1 的;
    返回 max_t |A†_ċ ν'(t) - A*_ċ ν(t)|
    """
    numerics = resolve_numerics(numerics)
    m1 = b.reference_metric if m1 is None else m1
    m2 = b.reference_metric if m2 is None else m2
    curve: Curve = geodesic(m1, p, x, duration, numerics=numerics)
    points = [curve.points[i] for i in (0, curve.steps // 2, curve.steps)]
    check_adapted(b, m1, m2, points)

    orbit1 = bundle_zoo.orbit_gram(b, p, m1)
    orbit2 = bundle_zoo.orbit_gram(b, p, m2)
    coords = bundle_zoo.connection_form(b, p, m2) @ nu0
    nu_start = b.action_vectors(p) @ np.linalg.solve(orbit1, orbit2 @ coords)
    nu_m1, nu_m2 = holonomy.vertical_fields(b,
                                            m1,
                                            curve, [nu_start, nu0], [1.0, 1.0],
                                            metrics=[m1, m2],
                                            numerics=numerics)
    indices = np.linspace(0, curve.steps, checkpoints).round().astype(int)
    residual = 0.0
    for i in indices:
        q, vel = curve.points[i], curve.velocities[i]
        first = SubmersionFrame(b, m1, q, numerics)
        second = SubmersionFrame(b, m2, q, numerics)
        diff = second.a_star(vel, nu_m2[i]) - first.a_star(vel, nu_m1[i])
        residual = max(residual, first.norm(diff))
    return residual


def s_decay(b: BundleInstance,
            m: Optional[MetricField],
            p: np.ndarray,
            numerics: Optional[NumericsConfig] = None) -> float:
    """p 处 |S| 的测量值, 用于正则化衰减"""
    return SubmersionFrame(b, m, p, numerics).s_norm()


def local_sectional(m: MetricField,
                    p: np.ndarray,
                    x: np.ndarray,
                    y: np.ndarray,
                    numerics: Optional[NumericsConfig] = None) -> float:
    """约化截面曲率"""
    return LocalGeometry(m, p, numerics).sectional(x, y, reduced=True)
