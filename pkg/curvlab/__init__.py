"""
curvlab: Cheeger 变形与 O'Neill 张量的数值验证
"""

from curvlab.version import version

__all__ = ["version"]
