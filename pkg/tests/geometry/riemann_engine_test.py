"""
有限差分曲率与 ODE 积分
"""

import numpy as np
import pytest

from curvlab.errors import (ConfigError, DegeneratePlaneError,
                            IntegrationError, SingularMetricError)
from curvlab.geometry.riemann_engine import (LocalGeometry, MetricField,
                                             NumericsConfig, flat_metric,
                                             g_orthonormal, geodesic, integrate,
                                             jacobi_field, parallel_transport,
                                             sectional, spd_power)
from curvlab.geometry.spheres import SphereProduct
from curvlab.utils import init_seed

S7 = SphereProduct((8, ), (1.0, ))
S4_HALF = SphereProduct((5, ), (0.5, ))
FAST = NumericsConfig(rk4_steps_per_unit=200)


def _unit_tangent(manifold, q, rng):
    v = manifold.tangent_project(q, rng.standard_normal(manifold.ambient_dim))
    return v / np.linalg.norm(v)


def test_numerics_defaults():
    """默认参数与覆盖"""
    numerics = NumericsConfig()
    assert numerics.fd_step_first == 1e-4
    assert numerics.fd_step_second == 1e-3
    assert numerics.rk4_steps_per_unit == 2000
    assert not numerics.richardson
    assert numerics.proj_stabilize
    assert numerics.steps_for(0.5) == 1000
    assert numerics.steps_for(1e-6) == 2
    assert numerics.replace(richardson=True).richardson
    assert NumericsConfig(fd_step_first=1e-5).fd_step_first == 1e-5


@pytest.mark.parametrize("kwargs", [{"bogus": 1}, {"fd_step_first": 0}, {"rk4_steps_per_unit": 0}])
def test_numerics_rejects(kwargs):
    """未知键或非法值"""
    with pytest.raises(ConfigError):
        NumericsConfig(**kwargs)


@pytest.mark.parametrize("manifold,expected", [(S7, 1.0), (S4_HALF, 4.0)])
def test_round_sectional(manifold, expected):
    """圆球面的截面曲率为 1/r²"""
    metric = flat_metric(manifold)
    rng = init_seed(11)
    for _ in range(3):
        q = manifold.sample(rng)
        x, y = _unit_tangent(manifold, q, rng), _unit_tangent(manifold, q, rng)
        value = sectional(metric, q, x, y, reduced=True)
        np.testing.assert_allclose(value, expected, rtol=1e-3)


def test_reduced_consistency():
    """约化与未约化差一个 Gram 行列式"""
    metric = flat_metric(S7)
    rng = init_seed(12)
    q = S7.sample(rng)
    x, y = 2 * _unit_tangent(S7, q, rng), _unit_tangent(S7, q, rng)
    local = LocalGeometry(metric, q)
    det = (x @ x) * (y @ y) - (x @ y)**2
    np.testing.assert_allclose(local.sectional(x, y, reduced=True) * det,
                               local.sectional(x, y),
                               rtol=1e-10)


def test_degenerate_plane():
    """平行向量张成退化平面"""
    metric = flat_metric(S7)
    rng = init_seed(13)
    q = S7.sample(rng)
    x = _unit_tangent(S7, q, rng)
    with pytest.raises(DegeneratePlaneError):
        LocalGeometry(metric, q).sectional(x, 2 * x, reduced=True)


def test_christoffel_symmetric():
    """Γ^l_ij 关于 i, j 对称"""
    local = LocalGeometry(flat_metric(S7), S7.sample(init_seed(14)))
    gamma = local.christoffel
    np.testing.assert_allclose(gamma, gamma.transpose(0, 2, 1), atol=1e-12)


def test_riemann_symmetries():
    """反对称, 对称与第一 Bianchi 恒等式"""
    rng = init_seed(15)
    q = S7.sample(rng)
    local = LocalGeometry(flat_metric(S7), q, NumericsConfig(richardson=True))
    x, y, z, w = (_unit_tangent(S7, q, rng) for _ in range(4))
    value = local.riemann4(x, y, z, w)
    assert abs(value + local.riemann4(y, x, z, w)) < 1e-6
    assert abs(value + local.riemann4(x, y, w, z)) < 1e-6
    assert abs(value - local.riemann4(z, w, x, y)) < 1e-6
    bianchi = value + local.riemann4(y, z, x, w) + local.riemann4(z, x, y, w)
    assert abs(bianchi) < 1e-6


def test_hessian_of_height():
    """单位球面上 Hess(<a, q>) = -<a, q> g"""
    rng = init_seed(16)
    q = S7.sample(rng)
    a = rng.standard_normal(8)
    x = _unit_tangent(S7, q, rng)
    local = LocalGeometry(flat_metric(S7), q)
    height = lambda point: float(a @ point)
    np.testing.assert_allclose(local.hessian_form(height, x, x), -(a @ q), atol=1e-5)
    np.testing.assert_allclose(local.gradient(height), S7.tangent_project(q, a), atol=1e-6)


def test_singular_metric():
    """退化的度量"""
    metric = MetricField(S7, lambda _q: np.zeros((8, 8)), "zero")
    with pytest.raises(SingularMetricError):
        _ = LocalGeometry(metric, S7.sample(init_seed(17))).gram0


def test_geodesic_is_great_circle():
    """exp_p(tv) = cos t p + sin t v"""
    rng = init_seed(18)
    q = S7.sample(rng)
    v = _unit_tangent(S7, q, rng)
    curve = geodesic(flat_metric(S7), q, v, 1.0, numerics=FAST)
    np.testing.assert_allclose(curve.end, np.cos(1.0) * q + np.sin(1.0) * v, atol=1e-6)
    assert curve.speed_drift() < 1e-8
    assert curve.steps == 200


def test_negative_duration():
    """负时长等价于反向速度"""
    rng = init_seed(19)
    q = S7.sample(rng)
    v = _unit_tangent(S7, q, rng)
    back, _ = integrate(flat_metric(S7), q, v, -0.5, numerics=FAST)
    np.testing.assert_allclose(back.end, np.cos(0.5) * q - np.sin(0.5) * v, atol=1e-6)


def test_too_few_steps():
    """步数少于 2"""
    rng = init_seed(20)
    q = S7.sample(rng)
    with pytest.raises(IntegrationError):
        integrate(flat_metric(S7), q, _unit_tangent(S7, q, rng), 1.0, steps=1)


def test_parallel_transport_isometry():
    """平行移动保持内积"""
    rng = init_seed(21)
    metric = flat_metric(S7)
    q = S7.sample(rng)
    v, w = _unit_tangent(S7, q, rng), _unit_tangent(S7, q, rng)
    curve = geodesic(metric, q, v, 1.0, numerics=FAST)
    field = parallel_transport(metric, curve, w, FAST)
    np.testing.assert_allclose(field.norms(), 1.0, atol=1e-8)
    assert field.tangency_residual() < 1e-8
    angles = np.einsum("ij,ij->i", field.values, curve.velocities)
    np.testing.assert_allclose(angles, v @ w, atol=1e-8)


def test_jacobi_on_round_sphere():
    """J(0) = 0, J'(0) = w ⊥ v: |J(t)| = sin t"""
    rng = init_seed(22)
    metric = flat_metric(S7)
    q = S7.sample(rng)
    v = _unit_tangent(S7, q, rng)
    w = _unit_tangent(S7, q, rng)
    w = w - (w @ v) * v
    w /= np.linalg.norm(w)
    curve = geodesic(metric, q, v, 1.0, numerics=FAST)
    field = jacobi_field(metric, curve, np.zeros(8), w, FAST)
    np.testing.assert_allclose(field.norms(), np.abs(np.sin(curve.times)), atol=1e-6)
    assert field.derivatives is not None


def test_spd_power():
    """A^{1/2} A^{1/2} = A, A^{-1} A = I"""
    rng = init_seed(23)
    base = rng.standard_normal((3, 3))
    mat = base @ base.T + np.eye(3)
    half = spd_power(mat, 0.5)
    np.testing.assert_allclose(half @ half, mat, atol=1e-10)
    np.testing.assert_allclose(spd_power(mat, -1.0) @ mat, np.eye(3), atol=1e-10)
    with pytest.raises(SingularMetricError):
        spd_power(-mat, 0.5)


def test_g_orthonormal():
    """Cholesky 正交化"""
    rng = init_seed(24)
    q = S7.sample(rng)
    vecs = S7.tangent_project(q, rng.standard_normal((8, 3)))
    scale = np.diag(np.arange(1.0, 9.0))
    metric = MetricField(S7, lambda _q: scale, "diag")
    basis = g_orthonormal(metric, q, vecs)
    np.testing.assert_allclose(basis.T @ scale @ basis, np.eye(3), atol=1e-10)
    with pytest.raises(SingularMetricError):
        g_orthonormal(metric, q, np.column_stack([vecs[:, 0], np.zeros(8)]))
