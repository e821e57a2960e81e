"""
球面乘积的嵌入与正交投影坐标卡

A point of S^{d1-1}(r1) x ... lives in R^{d1 + ...}; charts are orthographic
retractions y -> normalize(p + E y) re-centered at every evaluation point.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from curvlab.errors import OffManifoldError

EMBED_TOL = 1e-10


@dataclass(frozen=True)
class SphereProduct:
    """
    球面乘积 S^{d1-1}(r1) x S^{d2-1}(r2) x ...
    """
    dims: tuple[int, ...]
    radii: tuple[float, ...]

    @cached_property
    def slices(self) -> list[slice]:
        """每个因子在环境坐标中的位置"""
        out, start = [], 0
        for dim in self.dims:
            out.append(slice(start, start + dim))
            start += dim
        return out

    @property
    def ambient_dim(self) -> int:
        """环境维数"""
        return sum(self.dims)

    @property
    def dim(self) -> int:
        """流形维数"""
        return sum(self.dims) - len(self.dims)

    def constraint_residual(self, q: np.ndarray) -> float:
        """嵌入约束的残差"""
        return max(
            abs(np.linalg.norm(q[s]) - r) for s, r in zip(self.slices, self.radii))

    def check_point(self, q: np.ndarray, tol: float = EMBED_TOL) -> None:
        """不在流形上时报错"""
        q = np.asarray(q)
        if q.shape != (self.ambient_dim, ):
            raise OffManifoldError(
                f"expected a point in R^{self.ambient_dim}, got shape {q.shape}")
        residual = self.constraint_residual(q)
        if residual > tol:
            raise OffManifoldError(
                f"point violates the embedding constraint by {residual:.3e}")

    def normal_residual(self, p: np.ndarray, v: np.ndarray) -> float:
        """切向量与法空间的重叠"""
        return max(
            abs(p[s] @ v[s]) / r for s, r in zip(self.slices, self.radii))

    def check_tangent(self, p: np.ndarray, v: np.ndarray, tol: float = 1e-8):
        """切向量检查"""
        scale = max(1.0, float(np.linalg.norm(v)))
        if self.normal_residual(p, v) > tol * scale:
            raise OffManifoldError("vector is not tangent at the given point")

    def project(self, q: np.ndarray) -> np.ndarray:
        """逐因子归一化到半径 r"""
        out = np.array(q, dtype=float)
        for s, r in zip(self.slices, self.radii):
            out[s] *= r / np.linalg.norm(out[s])
        return out

    def tangent_project(self, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        """
        投影到 T_p; v 可以是 (N,) 或 (N, k)
        """
        out = np.array(v, dtype=float)
        for s, r in zip(self.slices, self.radii):
            out[s] -= np.multiply.outer(p[s], p[s] @ out[s]) / r**2
        return out

    def tangent_basis(self, p: np.ndarray) -> np.ndarray:
        """
        T_p 的欧氏标准正交基, N x n
        """
        basis = np.zeros((self.ambient_dim, self.dim))
        col = 0
        for s, dim in zip(self.slices, self.dims):
            block = scipy.linalg.null_space(p[s][None, :])
            basis[s, col:col + dim - 1] = block
            col += dim - 1
        return basis

    def normal_curvature(self, p: np.ndarray, a: np.ndarray,
                         b: np.ndarray) -> np.ndarray:
        """
        嵌入的第二基本形式 sum_f <a_f, b_f> p_f / r_f^2
        """
        out = np.zeros(self.ambient_dim)
        for s, r in zip(self.slices, self.radii):
            out[s] = (a[s] @ b[s]) * p[s] / r**2
        return out

    def retract(self, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        """正交投影回缩"""
        return self.project(p + v)

    def chart(self, p: np.ndarray) -> Chart:
        """以 p 为中心的坐标卡"""
        return Chart(self, np.asarray(p, dtype=float), self.tangent_basis(p))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """逐因子均匀采样"""
        return self.project(rng.standard_normal(self.ambient_dim))


@dataclass(frozen=True)
class Chart:
    """
    正交投影坐标卡 phi(y) = normalize(p + E y)
    """
    manifold: SphereProduct
    center: np.ndarray
    basis: np.ndarray

    def point(self, y: np.ndarray) -> np.ndarray:
        """坐标 -> 点"""
        return self.manifold.project(self.center + self.basis @ y)

    def jacobian(self, y: np.ndarray) -> np.ndarray:
        """d phi(y), N x n"""
        shifted = self.center + self.basis @ y
        jac = np.zeros_like(self.basis)
        for s, r in zip(self.manifold.slices, self.manifold.radii):
            a = shifted[s]
            norm = np.linalg.norm(a)
            unit = a / norm
            jac[s] = r * (self.basis[s] - np.outer(unit, unit @ self.basis[s])) / norm
        return jac

    def inverse(self, q: np.ndarray) -> np.ndarray:
        """点 -> 坐标"""
        shifted = np.empty_like(q, dtype=float)
        for s, r in zip(self.manifold.slices, self.manifold.radii):
            shifted[s] = r**2 * q[s] / (q[s] @ self.center[s]) - self.center[s]
        return self.basis.T @ shifted

    def components(self, y: np.ndarray, v: np.ndarray) -> np.ndarray:
        """切向量在坐标卡 y 处的分量"""
        coeffs, *_ = np.linalg.lstsq(self.jacobian(y), v, rcond=None)
        return coeffs
