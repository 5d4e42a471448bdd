"""
异常层次：三个族分别对应命令行退出码 2/3/4
"""
from typing import Any, Optional


class H2NetError(Exception):
    """所有领域异常的基类"""


# ---------- 输入错误（退出码 3） ----------

class InvalidInputError(H2NetError, ValueError):
    """输入数据不合法"""


class DimensionError(InvalidInputError):
    """矩阵维度不一致"""


class NormalizationFailed(InvalidInputError):
    """模型不满足 D₁Eᵀ=0, D₂ᵀC₂=0, D₁D₁ᵀ=I, D₂ᵀD₂=I"""


class Disconnected(InvalidInputError):
    """通信图不连通"""


class InvalidSpectrum(InvalidInputError):
    """拉普拉斯谱不满足 0 < λ₂ ≤ λ_N"""


class InvalidParameter(InvalidInputError):
    """设计参数越界"""


class GraphValidationError(InvalidInputError):
    """图文件不满足简单无向正权图的约束"""


# ---------- 数值错误（退出码 4） ----------

class NumericalError(H2NetError, ArithmeticError):
    """数值计算失败"""


class SingularMatrix(NumericalError):
    """LU 分解遇到过小主元"""


class NoConvergence(NumericalError):
    """迭代未收敛"""


class Overflow(NumericalError):
    """矩阵指数参数过大"""


class SingularOperator(NumericalError):
    """Lyapunov/Sylvester 算子奇异"""


class InitFailure(NumericalError):
    """找不到镇定初始增益"""


class NotStabilizing(NumericalError):
    """Riccati 解对应的闭环不是 Hurwitz"""


class NotSynchronizing(NumericalError):
    """协议不能使网络同步"""

    def __init__(self, message: str, detail: Optional[Any] = None):
        super().__init__(message)
        self.detail = detail


class Unstable(NumericalError):
    """模态闭环不稳定，H₂ 代价无定义"""


class Diverged(NumericalError):
    """仿真状态超出发散阈值"""


# ---------- 不可行（退出码 2） ----------

class InfeasibleDesign(H2NetError):
    """达到的上界 (N-1)·S(P,Q) 不小于 γ"""

    def __init__(self, bound: float, gamma: float, gains: Any = None, certificate: Any = None):
        super().__init__(f"achieved bound {bound:.6g} is not below gamma {gamma:.6g}")
        self.bound = bound
        self.gamma = gamma
        self.gains = gains
        self.certificate = certificate


class AllInfeasible(H2NetError):
    """扫描网格中没有可行点"""

    def __init__(self, best_bound: Optional[float], gamma: float, failures: int = 0):
        best = "none" if best_bound is None else f"{best_bound:.6g}"
        super().__init__(f"no grid point is feasible for gamma {gamma:.6g} (smallest bound {best})")
        self.best_bound = best_bound
        self.gamma = gamma
        self.failures = failures


class NotSuboptimal(H2NetError):
    """给定增益的实际网络代价 J 不小于 γ"""

    def __init__(self, cost: float, gamma: float):
        super().__init__(f"network cost J = {cost:.6g} is not below gamma {gamma:.6g}")
        self.cost = cost
        self.gamma = gamma
