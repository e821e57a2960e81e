"""
O'Neill 张量
"""

import numpy as np
import pytest

from curvlab.errors import HypothesisViolatedError, ParameterError
from curvlab.geometry.bundle_zoo import load_bundle
from curvlab.submersion.oneill import (SubmersionFrame, a_star, a_tensor,
                                       base_sectional_oneill,
                                       connection_curvature, fat_vector_check,
                                       fatness_check, kernel_a_x, nabla_a)
from curvlab.submersion.warping import linear_height, warped_metric
from curvlab.utils import init_seed


def _frame(name="hopf", seed=0, metric=None):
    b = load_bundle(name)
    p = b.sample_point(init_seed(seed))
    return b, SubmersionFrame(b, metric, p)


def test_a_antisymmetric():
    """A_X Y = -A_Y X, A_X X = 0"""
    b, frame = _frame(seed=1)
    x, y = frame.horizontal_on[:, 0], frame.horizontal_on[:, 1]
    np.testing.assert_allclose(a_tensor(b, None, frame.p, x, y),
                               -a_tensor(b, None, frame.p, y, x),
                               atol=1e-12)
    np.testing.assert_allclose(frame.a_tensor(x, x), 0.0, atol=1e-12)


def test_a_is_vertical():
    """A_X Y 竖直, 且 Hopf 上单位正交 X, Y 有 |A_X Y| = 1"""
    _, frame = _frame(seed=2)
    x, y = frame.horizontal_on[:, 0], frame.horizontal_on[:, 1]
    value = frame.a_tensor(x, y)
    np.testing.assert_allclose(frame.horizontal(value), 0.0, atol=1e-12)
    np.testing.assert_allclose(frame.norm(value), 1.0, rtol=1e-5)


def test_a_star_duality():
    """g(A*_X V, Y) = g(A_X Y, V)"""
    b, frame = _frame(seed=3)
    x, y = frame.horizontal_on[:, 0], frame.horizontal_on[:, 1]
    v = frame.vertical_on[:, 2]
    dual = a_star(b, None, frame.p, x, v)
    assert abs(frame.inner(dual, y) - frame.inner(frame.a_tensor(x, y), v)) < 1e-10


@pytest.mark.parametrize("name", ["trivial3x2", "trivial3x4"])
def test_trivial_bundle_is_flat(name):
    """平凡丛 A = S = 0"""
    _, frame = _frame(name, seed=4)
    x, y = frame.horizontal_on[:, 0], frame.horizontal_on[:, 1]
    v = frame.vertical_on[:, 0]
    assert frame.norm(frame.a_tensor(x, y)) < 1e-8
    assert frame.norm(frame.s_tensor(x, v)) < 1e-8


def test_hopf_fibers_totally_geodesic():
    """Hopf 纤维全测地"""
    _, frame = _frame(seed=5)
    assert frame.require_totally_geodesic() < 1e-5


def test_warped_metric_breaks_hypothesis():
    """扭曲度量下 |S| 超过阈值"""
    b = load_bundle("hopf")
    metric = warped_metric(b, None, linear_height(b, 2.0))
    _, frame = _frame(seed=6, metric=metric)
    with pytest.raises(HypothesisViolatedError):
        frame.require_totally_geodesic()


def test_connection_curvature():
    """Ω(X, Y)* = -2 A_X Y"""
    b, frame = _frame(seed=7)
    x, y = frame.horizontal_on[:, 0], frame.horizontal_on[:, 2]
    omega = connection_curvature(b, None, frame.p, x, y)
    np.testing.assert_allclose(frame.star(omega), -2 * frame.a_tensor(x, y), atol=1e-5)


def test_a_star_forms_agree():
    """联络曲率给出的 A* 与差分一致"""
    _, frame = _frame(seed=8)
    x, v = frame.horizontal_on[:, 1], frame.vertical_on[:, 1]
    np.testing.assert_allclose(frame.a_star_curvature(x, v), frame.a_star(x, v), atol=1e-5)


def test_extension_schemes_agree():
    """投影延拓与基本延拓给出同样的 A"""
    b = load_bundle("hopf")
    p = b.sample_point(init_seed(9))
    projected = SubmersionFrame(b, None, p)
    basic = SubmersionFrame(b, None, p, extension="basic")
    x, y = projected.horizontal_on[:, 0], projected.horizontal_on[:, 3]
    np.testing.assert_allclose(basic.a_tensor(x, y), projected.a_tensor(x, y), atol=1e-5)
    with pytest.raises(ParameterError):
        SubmersionFrame(b, None, p, extension="other")


def test_require_horizontal():
    """竖直向量不是水平的"""
    b, frame = _frame(seed=10)
    with pytest.raises(ParameterError):
        a_tensor(b, None, frame.p, frame.vertical_on[:, 0], frame.horizontal_on[:, 0])


def test_fatness_dichotomy():
    """Hopf 胖, 平凡丛退化"""
    b, frame = _frame(seed=11)
    cert = fatness_check(b, None, frame.p, frame.vertical_on[:, 0])
    assert cert.is_fat
    assert cert.min_abs_det >= 0.5
    np.testing.assert_allclose(cert.omega_matrix, -cert.omega_matrix.T)
    assert fat_vector_check(b, None, frame.p, frame.vertical_on[:, 0]) > 0.5

    b, frame = _frame("trivial3x2", seed=11)
    cert = fatness_check(b, None, frame.p, frame.vertical_on[:, 0])
    assert cert.verdict == "degenerate"
    with pytest.raises(ParameterError):
        fatness_check(b, None, frame.p, frame.horizontal_on[:, 0])


def test_kernel_dims():
    """Hopf 上 ker A_X = span(X), 平凡丛上为整个 H"""
    b, frame = _frame(seed=12)
    x = frame.horizontal_on[:, 0]
    kernel = kernel_a_x(b, None, frame.p, x)
    assert kernel.shape[1] == 1
    assert abs(abs(frame.inner(kernel[:, 0], x)) - 1.0) < 1e-6

    b, frame = _frame("trivial3x2", seed=12)
    assert kernel_a_x(b, None, frame.p, frame.horizontal_on[:, 0]).shape[1] == 2


def test_base_sectional_hopf():
    """K_B = K + 3|A_X Y|² = 4"""
    b, frame = _frame(seed=13)
    x, y = frame.horizontal_on[:, 0], frame.horizontal_on[:, 1]
    np.testing.assert_allclose(base_sectional_oneill(b, None, frame.p, x, y), 4.0, rtol=1e-3)


def test_nabla_a_matches_curvature():
    """(∇_X A)_X Y 的差分值与曲率给出的值一致"""
    b, frame = _frame(seed=14)
    x, y = frame.horizontal_on[:, 0], frame.horizontal_on[:, 1]
    result = nabla_a(b, None, frame.p, x, y)
    assert result.residual < 1e-3
