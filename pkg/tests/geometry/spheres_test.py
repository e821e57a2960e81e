"""
球面乘积与坐标卡
"""

import numpy as np
import pytest

from curvlab.errors import OffManifoldError
from curvlab.geometry.spheres import SphereProduct
from curvlab.utils import init_seed

PRODUCT = SphereProduct((4, 3), (1.0, 0.5))


def test_dims():
    """S^3 x S^2: 环境维数 7, 流形维数 5"""
    assert PRODUCT.ambient_dim == 7
    assert PRODUCT.dim == 5
    assert PRODUCT.slices == [slice(0, 4), slice(4, 7)]


def test_sample_on_manifold():
    """采样点满足约束"""
    q = PRODUCT.sample(init_seed(3))
    PRODUCT.check_point(q)
    assert PRODUCT.constraint_residual(q) < 1e-12


def test_check_point():
    """离开流形或形状不对时报错"""
    with pytest.raises(OffManifoldError):
        PRODUCT.check_point(np.ones(7))
    with pytest.raises(OffManifoldError):
        PRODUCT.check_point(np.ones(3))


def test_tangent_basis():
    """切空间基: 欧氏标准正交且与法向正交"""
    q = PRODUCT.sample(init_seed(4))
    basis = PRODUCT.tangent_basis(q)
    assert basis.shape == (7, 5)
    np.testing.assert_allclose(basis.T @ basis, np.eye(5), atol=1e-12)
    for col in basis.T:
        assert PRODUCT.normal_residual(q, col) < 1e-12


def test_tangent_project():
    """投影后是切向量, 且投影幂等"""
    rng = init_seed(5)
    q = PRODUCT.sample(rng)
    v = PRODUCT.tangent_project(q, rng.standard_normal(7))
    PRODUCT.check_tangent(q, v)
    np.testing.assert_allclose(PRODUCT.tangent_project(q, v), v, atol=1e-12)
    with pytest.raises(OffManifoldError):
        PRODUCT.check_tangent(q, q)


def test_chart():
    """φ(0) = p, J(0) = E, φ^{-1} ∘ φ = id"""
    rng = init_seed(6)
    q = PRODUCT.sample(rng)
    chart = PRODUCT.chart(q)
    np.testing.assert_allclose(chart.point(np.zeros(5)), q, atol=1e-15)
    np.testing.assert_allclose(chart.jacobian(np.zeros(5)), chart.basis, atol=1e-12)
    y = 0.1 * rng.standard_normal(5)
    np.testing.assert_allclose(chart.inverse(chart.point(y)), y, atol=1e-12)
    PRODUCT.check_point(chart.point(y))


def test_chart_jacobian_matches_differences():
    """坐标卡雅可比与差分一致"""
    rng = init_seed(7)
    chart = PRODUCT.chart(PRODUCT.sample(rng))
    y = 0.05 * rng.standard_normal(5)
    h = 1e-6
    numeric = np.column_stack([
        (chart.point(y + h * e) - chart.point(y - h * e)) / (2 * h) for e in np.eye(5)
    ])
    np.testing.assert_allclose(chart.jacobian(y), numeric, atol=1e-8)


def test_normal_curvature():
    """圆 S^7 上 II(v, v) = |v|² p"""
    sphere = SphereProduct((8, ), (1.0, ))
    rng = init_seed(8)
    q = sphere.sample(rng)
    v = sphere.tangent_project(q, rng.standard_normal(8))
    np.testing.assert_allclose(sphere.normal_curvature(q, v, v), (v @ v) * q)
