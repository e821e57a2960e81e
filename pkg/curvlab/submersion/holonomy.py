"""
沿水平/竖直测地线的 holonomy 场, 对偶 holonomy 场与基本场

    holonomy:       ∇_ċ ξ = -A*_ċ ξ - S_ċ ξ
    dual holonomy:  ∇_ċ ν = -A*_ċ ν + S_ċ ν
    basic:          ∇_γ̇ X = -A*_X γ̇ - S_X γ̇

The right-hand sides use the connection-curvature form of A* and the
orbit-tensor form of S, which are cheap enough to evaluate at every RK4 stage.
"""

from __future__ import annotations

import logging
from typing import Optional, Sequence

import numpy as np

from curvlab.errors import IntegrationError
from curvlab.geometry import bundle_zoo
from curvlab.geometry.bundle_zoo import BundleInstance
from curvlab.geometry.riemann_engine import (Curve, FieldAlongCurve,
                                             MetricField, NumericsConfig,
                                             integrate)
from curvlab.submersion.oneill import SubmersionFrame

logger = logging.getLogger(__name__)

SPLIT_TOL = 1e-6


def _metric(b: BundleInstance, m: Optional[MetricField]) -> MetricField:
    return b.reference_metric if m is None else m


def _split_residuals(b: BundleInstance, m: MetricField, curve: Curve,
                     vertical: bool) -> float:
    worst = 0.0
    stride = max(1, curve.steps // 64)
    for q, vel in zip(curve.points[::stride], curve.velocities[::stride]):
        proj = bundle_zoo.vertical_projector(b, q, m)
        part = vel - proj @ vel if vertical else proj @ vel
        speed = max(m.norm(q, vel), 1.0)
        worst = max(worst, m.norm(q, part) / speed)
    return worst


def require_horizontal_curve(b: BundleInstance, m: MetricField,
                             curve: Curve) -> None:
    """|ċ^v| < 1e-6"""
    residual = _split_residuals(b, m, curve, vertical=False)
    if residual > SPLIT_TOL:
        raise IntegrationError(
            f"curve is not horizontal (|ċ^v| up to {residual:.3e})")


def require_vertical_curve(b: BundleInstance, m: MetricField,
                           curve: Curve) -> None:
    """|γ̇^h| < 1e-6"""
    residual = _split_residuals(b, m, curve, vertical=True)
    if residual > SPLIT_TOL:
        raise IntegrationError(
            f"curve is not vertical (|γ̇^h| up to {residual:.3e})")


def vertical_fields(b: BundleInstance,
                    m: Optional[MetricField],
                    curve: Curve,
                    initial: Sequence[np.ndarray],
                    s_signs: Sequence[float],
                    metrics: Optional[Sequence[Optional[MetricField]]] = None,
                    numerics: Optional[NumericsConfig] = None
                    ) -> list[np.ndarray]:
    """
    同一条水平测地线上联合积分若干竖直场, 每个场可以用自己的度量

    s_signs[k] = -1 gives a holonomy field, +1 a dual holonomy field.
    """
    m = _metric(b, m)
    metrics = [m if fm is None else fm for fm in (metrics or [None] * len(initial))]
    require_horizontal_curve(b, m, curve)

    def law(q, vel, ws):
        frames = {}
        forces = []
        for w, fm, sign in zip(ws, metrics, s_signs):
            if id(fm) not in frames:
                frames[id(fm)] = SubmersionFrame(b, fm, q, numerics)
            frame = frames[id(fm)]
            forces.append(-frame.a_star_curvature(vel, w) +
                          sign * frame.s_orbit(vel, w))
        return forces

    stabilizers = [
        (lambda q, w, fm=fm: bundle_zoo.vertical_projector(b, q, fm) @ w)
        for fm in metrics
    ]
    _, values = integrate(m,
                          curve.start,
                          curve.velocity,
                          curve.duration,
                          list(initial),
                          law=law,
                          steps=curve.steps,
                          numerics=numerics,
                          stabilizers=stabilizers,
                          field_metrics=metrics)
    return values


def holonomy_field(b: BundleInstance,
                   m: Optional[MetricField],
                   curve: Curve,
                   xi0: np.ndarray,
                   numerics: Optional[NumericsConfig] = None) -> FieldAlongCurve:
    """
    holonomy 场 ∇_ċ ξ = -A*_ċ ξ - S_ċ ξ
    """
    SubmersionFrame(b, m, curve.start, numerics).require_vertical(xi0, "xi0")
    (values, ) = vertical_fields(b, m, curve, [xi0], [-1.0], numerics=numerics)
    return FieldAlongCurve(curve, values, "holonomy")


def dual_holonomy_field(b: BundleInstance,
                        m: Optional[MetricField],
                        curve: Curve,
                        nu0: np.ndarray,
                        numerics: Optional[NumericsConfig] = None
                        ) -> FieldAlongCurve:
    """
    对偶 holonomy 场 ∇_ċ ν = -A*_ċ ν + S_ċ ν
    """
    SubmersionFrame(b, m, curve.start, numerics).require_vertical(nu0, "nu0")
    (values, ) = vertical_fields(b, m, curve, [nu0], [1.0], numerics=numerics)
    return FieldAlongCurve(curve, values, "dual_holonomy")


def basic_field(b: BundleInstance,
                m: Optional[MetricField],
                curve: Curve,
                x0: np.ndarray,
                numerics: Optional[NumericsConfig] = None) -> FieldAlongCurve:
    """
    竖直测地线上的基本场 ∇_γ̇ X = -A*_X γ̇ - S_X γ̇
    """
    m = _metric(b, m)
    SubmersionFrame(b, m, curve.start, numerics).require_horizontal(x0, "X0")
    require_vertical_curve(b, m, curve)

    def law(q, vel, ws):
        frame = SubmersionFrame(b, m, q, numerics)
        x = ws[0]
        return [-frame.a_star_curvature(x, vel) - frame.s_orbit(x, vel)]

    _, (values, ) = integrate(
        m,
        curve.start,
        curve.velocity,
        curve.duration, [x0],
        law=law,
        steps=curve.steps,
        numerics=numerics,
        stabilizers=[lambda q, w: bundle_zoo.horizontal_projector(b, q, m) @ w])
    return FieldAlongCurve(curve, values, "basic")


def invariant_vertical_field(b: BundleInstance,
                             m: Optional[MetricField],
                             curve: Curve,
                             xi0: np.ndarray) -> FieldAlongCurve:
    """
    作用场 u*(c(t)), u = θ(ξ0); 主丛上它就是 holonomy 场
    """
    u = bundle_zoo.connection_form(b, curve.start, m) @ xi0
    values = np.array([b.action_vectors(q) @ u for q in curve.points])
    return FieldAlongCurve(curve, values, "holonomy")


def growth_ratio(field: FieldAlongCurve) -> float:
    """max_t |ξ(t)| / |ξ(0)|"""
    norms = field.norms()
    if norms[0] == 0.0:
        return float(np.max(norms))
    return float(np.max(norms) / norms[0])
