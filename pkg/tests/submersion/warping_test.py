"""
竖直扭曲度量的截面曲率
"""

import numpy as np
import pytest

from curvlab.errors import BasicFunctionError, ParameterError
from curvlab.geometry.bundle_zoo import load_bundle, orbit_gram
from curvlab.submersion.oneill import SubmersionFrame
from curvlab.submersion.warping import (BasicFunction, check_basic,
                                        constant_function, linear_height,
                                        warped_metric, warped_sectional,
                                        warped_sectional_oracle)
from curvlab.utils import init_seed

HOPF = load_bundle("hopf")
HEIGHT = linear_height(HOPF, 2.0)


def _setup(seed):
    p = HOPF.sample_point(init_seed(seed))
    return p, SubmersionFrame(HOPF, None, p)


def _plane(frame, kind):
    hor, ver = frame.horizontal_on, frame.vertical_on
    return {
        "hh": (hor[:, 0], hor[:, 1]),
        "vv": (ver[:, 0], ver[:, 1]),
        "vh": (hor[:, 2], ver[:, 2]),
    }[kind]


def test_linear_height_is_basic():
    """h = c + x0 沿纤维不变且为正"""
    p, _ = _setup(0)
    check_basic(HOPF, HEIGHT, p)
    assert 1.5 <= HEIGHT(p) <= 2.5


def test_non_basic_function():
    """依赖纤维坐标的函数"""
    p, _ = _setup(1)
    with pytest.raises(BasicFunctionError):
        check_basic(HOPF, BasicFunction(lambda q: 2.0 + q[0], "2 + p0"), p)
    with pytest.raises(ParameterError):
        check_basic(HOPF, constant_function(-1.0), p)


def test_warped_orbit():
    """竖直部分缩放 1/h"""
    p, _ = _setup(2)
    np.testing.assert_allclose(orbit_gram(HOPF, p, warped_metric(HOPF, None, HEIGHT)),
                               np.eye(3) / HEIGHT(p),
                               atol=1e-12)


@pytest.mark.parametrize("kind", ["hh", "vv", "vh"])
def test_formula_matches_oracle(kind):
    """三类平面的闭式与有限差分一致"""
    p, frame = _setup(3)
    vectors = _plane(frame, kind)
    formula = warped_sectional(HOPF, None, HEIGHT, p, kind, vectors)
    oracle = warped_sectional_oracle(HOPF, None, HEIGHT, p, vectors)
    assert abs(formula - oracle) < 1e-2


@pytest.mark.parametrize("kind", ["hh", "vh"])
def test_constant_one_is_identity(kind):
    """h ≡ 1 时就是原度量的曲率"""
    p, frame = _setup(4)
    vectors = _plane(frame, kind)
    value = warped_sectional(HOPF, None, constant_function(1.0), p, kind, vectors)
    np.testing.assert_allclose(value, frame.local.sectional(*vectors), atol=1e-6)


def test_bad_plane():
    """未知的平面类型, 或类型与向量不符"""
    p, frame = _setup(5)
    with pytest.raises(ParameterError):
        warped_sectional(HOPF, None, HEIGHT, p, "xy", _plane(frame, "hh"))
    with pytest.raises(ParameterError):
        warped_sectional(HOPF, None, HEIGHT, p, "hh", _plane(frame, "vh"))
