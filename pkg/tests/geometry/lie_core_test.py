"""
四元数与李代数
"""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from curvlab.errors import GroupElementError
from curvlab.geometry.lie_core import (Quaternion, adjoint, bracket, group_exp,
                                       hamilton, left_matrix, q_inner, q_norm,
                                       right_matrix, sphere_grid)

coords = st.floats(min_value=-10, max_value=10, allow_nan=False)
quaternions = st.builds(Quaternion, coords, coords, coords, coords)
algebra = st.lists(st.floats(min_value=-3, max_value=3, allow_nan=False),
                   min_size=3,
                   max_size=3).map(np.array)

I, J, K = np.eye(3)


def test_units():
    """i j = k, j i = -k, i² = -1"""
    qi, qj = Quaternion.from_algebra(I), Quaternion.from_algebra(J)
    np.testing.assert_allclose((qi * qj).array, [0, 0, 0, 1])
    np.testing.assert_allclose((qj * qi).array, [0, 0, 0, -1])
    np.testing.assert_allclose((qi * qi).array, [-1, 0, 0, 0])


@given(quaternions, quaternions)
def test_multiplication_matrices(a, b):
    """L_a b = a b = R_b a"""
    np.testing.assert_allclose(left_matrix(a.array) @ b.array,
                               hamilton(a.array, b.array),
                               atol=1e-9)
    np.testing.assert_allclose(right_matrix(b.array) @ a.array,
                               hamilton(a.array, b.array),
                               atol=1e-9)


@given(quaternions, quaternions, quaternions)
def test_associative(a, b, c):
    """(ab)c = a(bc)"""
    np.testing.assert_allclose(((a * b) * c).array, (a * (b * c)).array,
                               rtol=1e-9,
                               atol=1e-7)


@given(quaternions)
def test_norm_squared(q):
    """q q̄ = |q|²"""
    prod = (q * q.conjugate()).array
    np.testing.assert_allclose(prod, [q.norm()**2, 0, 0, 0], rtol=1e-9, atol=1e-9)


def test_bracket_examples():
    """[i, j] = 2k, [j, i] = -2k, [u, u] = 0"""
    np.testing.assert_allclose(bracket(I, J), 2 * K)
    np.testing.assert_allclose(bracket(J, I), -2 * K)
    np.testing.assert_allclose(bracket(I, I), np.zeros(3))


@given(algebra, algebra, algebra)
def test_jacobi_identity(u, v, w):
    """[u,[v,w]] + [v,[w,u]] + [w,[u,v]] = 0"""
    total = (bracket(u, bracket(v, w)) + bracket(v, bracket(w, u)) +
             bracket(w, bracket(u, v)))
    assert np.max(np.abs(total)) < 1e-10


@given(algebra, algebra)
def test_bracket_antisymmetric(u, v):
    """[u, v] = -[v, u]"""
    np.testing.assert_allclose(bracket(u, v), -bracket(v, u), atol=1e-12)


def test_exp():
    """exp(0) = 1, exp(π/2 i) = i"""
    np.testing.assert_allclose(group_exp(np.zeros(3)).array, [1, 0, 0, 0])
    np.testing.assert_allclose(group_exp(np.pi / 2 * I).array, [0, 1, 0, 0],
                               atol=1e-15)


@given(algebra)
def test_exp_is_unit(u):
    """exp 落在 S^3 上"""
    assert group_exp(u).is_unit()


@given(algebra, algebra)
def test_adjoint_is_isometry(u, v):
    """Q(Ad_g v, Ad_g v) = Q(v, v), 且 Ad 与括号交换"""
    g = group_exp(u)
    np.testing.assert_allclose(q_norm(adjoint(g, v)), q_norm(v), rtol=1e-9, atol=1e-12)
    w = np.array([0.3, -0.2, 0.5])
    np.testing.assert_allclose(adjoint(g, bracket(v, w)),
                               bracket(adjoint(g, v), adjoint(g, w)),
                               atol=1e-9)


def test_adjoint_needs_unit():
    """非单位四元数报错"""
    with pytest.raises(GroupElementError):
        adjoint(Quaternion(2.0, 0.0, 0.0, 0.0), I)


def test_inverse():
    """q q^{-1} = 1"""
    q = Quaternion(1.0, 2.0, -0.5, 0.25)
    np.testing.assert_allclose((q * q.inverse()).array, [1, 0, 0, 0], atol=1e-15)


def test_q_inner_ad_invariant():
    """Q([u, v], w) = -Q(v, [u, w])"""
    u, v, w = np.array([1.0, 2, 3]), np.array([-1.0, 0.5, 2]), np.array([0.2, 0.1, -1])
    assert abs(q_inner(bracket(u, v), w) + q_inner(v, bracket(u, w))) < 1e-12


def test_sphere_grid():
    """162 个单位方向, 两两不同"""
    grid = sphere_grid()
    assert grid.shape == (162, 3)
    np.testing.assert_allclose(np.linalg.norm(grid, axis=1), 1.0)
    assert len(np.unique(grid.round(8), axis=0)) == 162
    assert sphere_grid(0).shape == (12, 3)
