# vim:fenc=utf-8
#
# Copyright © 2023 n3xtchen <echenwen@gmail.com>
#
# Distributed under terms of the GPL-2.0 license.

"""
定义版本
"""

__version__ = '0.2.0'


def version() -> str:
    """
    返回版本
    """
    return __version__
