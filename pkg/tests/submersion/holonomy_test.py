"""
holonomy 场与基本场
"""

import numpy as np
import pytest

from curvlab.errors import IntegrationError
from curvlab.geometry.bundle_zoo import load_bundle
from curvlab.geometry.riemann_engine import NumericsConfig, geodesic
from curvlab.submersion.holonomy import (basic_field, dual_holonomy_field,
                                         growth_ratio, holonomy_field,
                                         invariant_vertical_field)
from curvlab.submersion.cheeger import metric_gt
from curvlab.submersion.oneill import SubmersionFrame
from curvlab.submersion.warping import linear_height, warped_metric
from curvlab.utils import init_seed

HOPF = load_bundle("hopf")
FAST = NumericsConfig(rk4_steps_per_unit=100)
WARPED = warped_metric(HOPF, None, linear_height(HOPF, 2.0))
BERGER = metric_gt(HOPF, None, 1.0)


def _horizontal_curve(seed, duration=0.5):
    p = HOPF.sample_point(init_seed(seed))
    frame = SubmersionFrame(HOPF, None, p)
    curve = geodesic(HOPF.reference_metric, p, frame.horizontal_on[:, 0], duration,
                     numerics=FAST)
    return frame, curve


def test_holonomy_is_action_field():
    """主丛上 holonomy 场就是作用场"""
    frame, curve = _horizontal_curve(1)
    xi0 = frame.vertical_on[:, 0]
    field = holonomy_field(HOPF, None, curve, xi0, FAST)
    expected = invariant_vertical_field(HOPF, None, curve, xi0)
    assert np.max(np.linalg.norm(field.values - expected.values, axis=1)) < 1e-3
    assert field.kind == "holonomy"


def test_dual_equals_holonomy_on_round_metric():
    """S = 0 时两种场一致"""
    frame, curve = _horizontal_curve(2)
    v = frame.vertical_on[:, 1]
    hol = holonomy_field(HOPF, None, curve, v, FAST)
    dual = dual_holonomy_field(HOPF, None, curve, v, FAST)
    np.testing.assert_allclose(dual.values, hol.values, atol=1e-6)


def test_growth_ratio():
    """圆度量下 holonomy 场等长"""
    frame, curve = _horizontal_curve(3)
    field = holonomy_field(HOPF, None, curve, frame.vertical_on[:, 2], FAST)
    assert abs(growth_ratio(field) - 1.0) < 1e-6


def test_vertical_curve_rejected():
    """holonomy 场需要水平曲线, 基本场需要竖直曲线"""
    p = HOPF.sample_point(init_seed(4))
    frame = SubmersionFrame(HOPF, None, p)
    v = frame.vertical_on[:, 0]
    fiber = geodesic(HOPF.reference_metric, p, v, 0.2, numerics=FAST)
    with pytest.raises(IntegrationError):
        holonomy_field(HOPF, None, fiber, v, FAST)
    _, curve = _horizontal_curve(4, duration=0.2)
    with pytest.raises(IntegrationError):
        basic_field(HOPF, None, curve, frame.horizontal_on[:, 0], FAST)


def test_basic_field_is_projectable():
    """沿纤维 dπ X 不变"""
    p = HOPF.sample_point(init_seed(5))
    frame = SubmersionFrame(HOPF, None, p)
    x0 = frame.horizontal_on[:, 1]
    fiber = geodesic(HOPF.reference_metric, p, frame.vertical_on[:, 0], 0.5, numerics=FAST)
    field = basic_field(HOPF, None, fiber, x0, FAST)
    start = HOPF.projection_differential(p) @ x0
    end = HOPF.projection_differential(fiber.end) @ field.values[-1]
    np.testing.assert_allclose(end, start, atol=1e-4)
    np.testing.assert_allclose(field.norms(), 1.0, atol=1e-6)


def _curve_on(metric, seed, duration=0.5):
    p = HOPF.sample_point(init_seed(seed))
    frame = SubmersionFrame(HOPF, metric, p)
    curve = geodesic(metric, p, frame.horizontal_on[:, 0], duration, numerics=FAST)
    return frame, curve


@pytest.mark.parametrize("metric", [WARPED, BERGER], ids=["warped", "cheeger"])
def test_holonomy_is_action_field_on_deformed(metric):
    """不变度量下 holonomy 场仍是作用场"""
    frame, curve = _curve_on(metric, 6)
    xi0 = frame.vertical_on[:, 1]
    field = holonomy_field(HOPF, metric, curve, xi0, FAST)
    expected = invariant_vertical_field(HOPF, metric, curve, xi0)
    assert np.max(np.linalg.norm(field.values - expected.values, axis=1)) < 1e-3


def test_pairing_conserved_on_warped():
    """S ≠ 0 时 g(ξ, ν) 沿曲线不变, 两种场不同"""
    frame, curve = _curve_on(WARPED, 7)
    assert frame.s_norm() > 1e-3
    xi = holonomy_field(HOPF, WARPED, curve, frame.vertical_on[:, 0], FAST)
    nu = dual_holonomy_field(HOPF, WARPED, curve, frame.vertical_on[:, 2], FAST)
    pairing = [WARPED.inner(q, a, b) for q, a, b in zip(curve.points, xi.values, nu.values)]
    np.testing.assert_allclose(pairing, pairing[0], atol=1e-5)
    same = dual_holonomy_field(HOPF, WARPED, curve, frame.vertical_on[:, 0], FAST)
    assert np.max(np.linalg.norm(same.values - xi.values, axis=1)) > 1e-6


def test_dual_equals_holonomy_on_cheeger():
    """g_t 的纤维仍全测地, 两种场一致"""
    frame, curve = _curve_on(BERGER, 8)
    v = frame.vertical_on[:, 0]
    hol = holonomy_field(HOPF, BERGER, curve, v, FAST)
    dual = dual_holonomy_field(HOPF, BERGER, curve, v, FAST)
    np.testing.assert_allclose(dual.values, hol.values, atol=1e-6)
