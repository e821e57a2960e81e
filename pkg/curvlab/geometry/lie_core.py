"""
四元数与李代数 su(2) ≅ Im H ≅ R^3

Conventions: [u, v] = uv - vu in H (so [i, j] = 2k), Q is the Euclidean dot
product on R^3, SO(3) is handled through its double cover S^3.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from curvlab.errors import GroupElementError

AlgebraVector = npt.NDArray[np.float64]

UNIT_TOL = 1e-10


def hamilton(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    四元数乘法, 数组形式 (w, x, y, z)
    """
    a0, av = a[0], a[1:]
    b0, bv = b[0], b[1:]
    out = np.empty(4)
    out[0] = a0 * b0 - av @ bv
    out[1:] = a0 * bv + b0 * av + np.cross(av, bv)
    return out


def left_matrix(q: np.ndarray) -> np.ndarray:
    """
    左乘矩阵 L_q, 满足 L_q x = q x
    """
    w, x, y, z = q
    return np.array([
        [w, -x, -y, -z],
        [x, w, -z, y],
        [y, z, w, -x],
        [z, -y, x, w],
    ])


def right_matrix(q: np.ndarray) -> np.ndarray:
    """
    右乘矩阵 R_q, 满足 R_q x = x q
    """
    w, x, y, z = q
    return np.array([
        [w, -x, -y, -z],
        [x, w, z, -y],
        [y, -z, w, x],
        [z, y, -x, w],
    ])


CONJUGATION = np.diag([1.0, -1.0, -1.0, -1.0])


@dataclass(frozen=True)
class Quaternion:
    """
    四元数 w + xi + yj + zk
    """
    w: float
    x: float
    y: float
    z: float

    @classmethod
    def from_array(cls, arr) -> Quaternion:
        """从数组构造"""
        w, x, y, z = (float(c) for c in arr)
        return cls(w, x, y, z)

    @classmethod
    def from_algebra(cls, u: AlgebraVector) -> Quaternion:
        """纯虚四元数"""
        return cls(0.0, float(u[0]), float(u[1]), float(u[2]))

    @classmethod
    def identity(cls) -> Quaternion:
        """单位元"""
        return cls(1.0, 0.0, 0.0, 0.0)

    @property
    def array(self) -> np.ndarray:
        """(w, x, y, z)"""
        return np.array([self.w, self.x, self.y, self.z])

    @property
    def imag(self) -> AlgebraVector:
        """虚部, 即 Im H 中的分量"""
        return np.array([self.x, self.y, self.z])

    def __mul__(self, other: Quaternion) -> Quaternion:
        return Quaternion.from_array(hamilton(self.array, other.array))

    def __add__(self, other: Quaternion) -> Quaternion:
        return Quaternion.from_array(self.array + other.array)

    def __sub__(self, other: Quaternion) -> Quaternion:
        return Quaternion.from_array(self.array - other.array)

    def conjugate(self) -> Quaternion:
        """共轭"""
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def norm(self) -> float:
        """模长"""
        return float(np.linalg.norm(self.array))

    def normalized(self) -> Quaternion:
        """单位化"""
        return Quaternion.from_array(self.array / self.norm())

    def inverse(self) -> Quaternion:
        """逆元"""
        conj = self.conjugate().array
        return Quaternion.from_array(conj / (self.norm()**2))

    def is_unit(self, tol: float = UNIT_TOL) -> bool:
        """是否为群 S^3 中的元素"""
        return abs(self.norm() - 1.0) <= tol


def random_group_element(rng: np.random.Generator) -> Quaternion:
    """S^3 上均匀采样"""
    vec = rng.standard_normal(4)
    return Quaternion.from_array(vec / np.linalg.norm(vec))


def algebra_basis() -> np.ndarray:
    """
    i, j, k 对应的标准基, 每列一个
    """
    return np.eye(3)


def bracket(u: AlgebraVector, v: AlgebraVector) -> AlgebraVector:
    """
    李括号 uv - vu, 在 H 中计算
    """
    qu, qv = Quaternion.from_algebra(u), Quaternion.from_algebra(v)
    return (qu * qv - qv * qu).imag


def group_exp(u: AlgebraVector) -> Quaternion:
    """
    群指数映射 cos|u| + (u/|u|) sin|u|
    """
    u = np.asarray(u, dtype=float)
    theta = float(np.linalg.norm(u))
    # sin(theta)/theta, 在 0 处连续
    sinc = np.sinc(theta / np.pi)
    return Quaternion(np.cos(theta), *(sinc * u))


def adjoint(g: Quaternion, v: AlgebraVector) -> AlgebraVector:
    """
    伴随作用 Ad_g v = g v g^{-1}
    """
    if not g.is_unit():
        raise GroupElementError(g.norm())
    return (g * Quaternion.from_algebra(v) * g.conjugate()).imag


def q_inner(u: AlgebraVector, v: AlgebraVector) -> float:
    """
    双不变内积 Q, 取为 R^3 的点积
    """
    return float(np.dot(u, v))


def q_norm(u: AlgebraVector) -> float:
    """Q 范数"""
    return float(np.sqrt(q_inner(u, u)))


def sphere_grid(subdivisions: int = 2) -> np.ndarray:
    """
    g 中单位球面上的二十面体细分网格

    subdivisions=2 gives 162 directions, one per row.
    """
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    points = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]
    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(i: int, j: int) -> int:
            key = (min(i, j), max(i, j))
            if key not in cache:
                mid = points[i] + points[j]
                points.append(mid / np.linalg.norm(mid))
                cache[key] = len(points) - 1
            return cache[key]

        refined = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            refined += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = refined
    return np.array(points)
