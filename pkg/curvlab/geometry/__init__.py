"""
几何层: 四元数, 球面乘积, 丛与有限差分曲率
"""
