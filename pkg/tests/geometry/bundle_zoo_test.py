"""
Hopf 丛与平凡丛
"""

import numpy as np
import pytest

from curvlab.errors import ConfigError, DimensionMismatchError, OffManifoldError
from curvlab.geometry.bundle_zoo import (action_field, action_vector,
                                         basic_extension, bundle_projection,
                                         connection_form, horizontal_basis,
                                         horizontal_lift, load_bundle, orbit_gram,
                                         vertical_projector)
from curvlab.geometry.lie_core import group_exp
from curvlab.utils import init_seed

BUNDLES = ["hopf", "trivial3x2", "trivial3x4"]


@pytest.fixture(params=BUNDLES)
def bundle(request):
    return load_bundle(request.param)


def test_load_bundle():
    """按名称加载, 且有缓存"""
    assert load_bundle("hopf") is load_bundle("hopf")
    assert load_bundle("hopf").base_curvature == 4.0
    assert load_bundle("trivial3x2").base_curvature == 1.0
    with pytest.raises(ConfigError):
        load_bundle("hopf2")


def test_dims():
    """全空间与底空间维数"""
    hopf, trivial = load_bundle("hopf"), load_bundle("trivial3x2")
    assert (hopf.total_dim, hopf.base_dim) == (7, 4)
    assert (trivial.total_dim, trivial.base_dim) == (5, 2)


def test_hopf_projection_lands_on_base():
    """π(S^7) ⊂ S^4(1/2)"""
    hopf = load_bundle("hopf")
    rng = init_seed(1)
    for _ in range(5):
        base_point = bundle_projection(hopf, hopf.sample_point(rng))
        np.testing.assert_allclose(np.linalg.norm(base_point), 0.5, rtol=1e-12)


def test_projection_is_invariant(bundle):
    """π(g·p) = π(p)"""
    rng = init_seed(2)
    p = bundle.sample_point(rng)
    g = group_exp(rng.standard_normal(3))
    np.testing.assert_allclose(bundle.projection(bundle.act(g, p)),
                               bundle.projection(p),
                               atol=1e-12)


def test_action_vectors_are_vertical(bundle):
    """dπ K = 0, 且 K 切于全空间"""
    p = bundle.sample_point(init_seed(3))
    cols = bundle.action_vectors(p)
    np.testing.assert_allclose(bundle.projection_differential(p) @ cols, 0.0, atol=1e-12)
    for col in cols.T:
        bundle.total.check_tangent(p, col)


def test_action_vector_matches_flow(bundle):
    """U* 为 Exp(tU)·p 的导数"""
    rng = init_seed(4)
    p = bundle.sample_point(rng)
    u = rng.standard_normal(3)
    h = 1e-6
    numeric = (bundle.act(group_exp(h * u), p) - bundle.act(group_exp(-h * u), p)) / (2 * h)
    np.testing.assert_allclose(action_vector(bundle, p, u), numeric, atol=1e-8)
    np.testing.assert_allclose(action_field(bundle, u)(p), action_vector(bundle, p, u))


def test_reference_orbit_gram(bundle):
    """参考度量下 P = I"""
    p = bundle.sample_point(init_seed(5))
    np.testing.assert_allclose(orbit_gram(bundle, p), np.eye(3), atol=1e-12)


def test_connection_form(bundle):
    """θ(U*) = U, 竖直投影幂等"""
    p = bundle.sample_point(init_seed(6))
    theta = connection_form(bundle, p)
    np.testing.assert_allclose(theta @ bundle.action_vectors(p), np.eye(3), atol=1e-12)
    proj = vertical_projector(bundle, p)
    np.testing.assert_allclose(proj @ proj, proj, atol=1e-12)


def test_horizontal_basis(bundle):
    """H_p 维数为 n - 3, 且与竖直方向正交"""
    p = bundle.sample_point(init_seed(7))
    basis = horizontal_basis(bundle, p)
    assert basis.shape[1] == bundle.total_dim - 3
    np.testing.assert_allclose(bundle.action_vectors(p).T @ basis, 0.0, atol=1e-12)


def test_submersion_is_isometric(bundle):
    """|dπ X| = |X|, X 水平"""
    rng = init_seed(8)
    p = bundle.sample_point(rng)
    x = horizontal_basis(bundle, p) @ rng.standard_normal(bundle.total_dim - 3)
    np.testing.assert_allclose(np.linalg.norm(bundle.projection_differential(p) @ x),
                               np.linalg.norm(x),
                               rtol=1e-10)


def test_horizontal_lift_inverts_projection(bundle):
    """提升 dπ X 得到 X"""
    rng = init_seed(9)
    p = bundle.sample_point(rng)
    x = horizontal_basis(bundle, p) @ rng.standard_normal(bundle.total_dim - 3)
    lifted = horizontal_lift(bundle, bundle.projection(p),
                             bundle.projection_differential(p) @ x, p)
    np.testing.assert_allclose(lifted, x, atol=1e-10)
    np.testing.assert_allclose(basic_extension(bundle, p, x)(p), x, atol=1e-10)


def test_horizontal_lift_errors():
    """维数不符或不在纤维上"""
    hopf = load_bundle("hopf")
    rng = init_seed(10)
    p = hopf.sample_point(rng)
    with pytest.raises(DimensionMismatchError):
        horizontal_lift(hopf, hopf.projection(p), np.zeros(4), p)
    with pytest.raises(OffManifoldError):
        horizontal_lift(hopf, -hopf.projection(p), np.zeros(5), p)
