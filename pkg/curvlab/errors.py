"""
异常定义

All library errors derive from CurvlabError so the CLI can map them to exit codes.
"""


class CurvlabError(Exception):
    """curvlab 基础异常"""


class GroupElementError(CurvlabError, ValueError):
    """群元素不是单位四元数"""

    def __init__(self, norm: float):
        super().__init__(f"group element not normalized (|g| = {norm:.3e})")
        self.norm = norm


class OffManifoldError(CurvlabError, ValueError):
    """点或切向量不满足嵌入约束"""


class DimensionMismatchError(CurvlabError, ValueError):
    """维度不匹配"""


class ParameterError(CurvlabError, ValueError):
    """参数越界, 例如 t < 0"""


class SingularMetricError(CurvlabError, ArithmeticError):
    """Gram 矩阵奇异 (度量退化或作用不自由)"""


class DegeneratePlaneError(CurvlabError, ArithmeticError):
    """退化平面"""

    def __init__(self, gram_det: float):
        super().__init__(f"degenerate plane (Gram determinant {gram_det:.3e})")
        self.gram_det = gram_det


class IntegrationError(CurvlabError, ValueError):
    """ODE 积分输入不合法"""


class HypothesisViolatedError(CurvlabError):
    """恒等式的前提 (纤维全测地) 不成立"""

    def __init__(self, max_s: float, threshold: float):
        super().__init__(
            f"hypothesis violated: max |S| = {max_s:.3e} exceeds {threshold:.1e}")
        self.max_s = max_s
        self.threshold = threshold


class NotAdaptedError(CurvlabError, ValueError):
    """两个度量不适配于同一个 (H, b)"""


class BasicFunctionError(CurvlabError, ValueError):
    """函数沿纤维不是常数"""


class ConfigError(CurvlabError, ValueError):
    """配置错误, CLI 退出码 2"""


class ReportWriteError(CurvlabError, OSError):
    """报告写入失败"""

    def __init__(self, path, reason: str):
        super().__init__(f"cannot write report to {path}: {reason}")
        self.path = path
