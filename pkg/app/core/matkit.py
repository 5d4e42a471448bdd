"""
稠密实矩阵内核：LU 求解、对称特征分解、Kronecker 积、矩阵指数、正定性检验
"""
import logging
import warnings
from typing import Optional, Tuple

import numpy as np
import scipy.linalg as la

from app.core.errors import DimensionError, NoConvergence, Overflow, SingularMatrix
from app.core.numerics import NumericSettings, numerics

logger = logging.getLogger(__name__)


def as_matrix(value, name: str = "matrix") -> np.ndarray:
    """转换为二维浮点数组并检查有限性"""
    # 标量视为 1×1，一维 [a, b] 视为 1×k 行向量
    M = np.atleast_2d(np.asarray(value, dtype=float))
    if M.ndim != 2:
        raise DimensionError(f"{name} must be two-dimensional, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DimensionError(f"{name} contains NaN or Inf entries")
    return M


def frobenius(A: np.ndarray) -> float:
    return float(np.linalg.norm(A, 'fro')) if np.size(A) else 0.0


def symmetrize(S: np.ndarray) -> np.ndarray:
    return 0.5 * (S + S.T)


def _require_square(A: np.ndarray, name: str):
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")


def lu_solve(A: np.ndarray, B: np.ndarray, settings: Optional[NumericSettings] = None) -> np.ndarray:
    """
    部分主元 LU 求解 AX = B
    Args:
        A: n×n 方阵
        B: n×k 右端项（一维时按列向量处理）
    Returns:
        X，形状与 B 相同
    Raises:
        SingularMatrix: 主元绝对值小于 lu_pivot_rel·‖A‖_F
    """
    settings = numerics.resolve(settings)
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    _require_square(A, "A")
    if B.shape[0] != A.shape[0]:
        raise DimensionError(f"right-hand side has {B.shape[0]} rows, expected {A.shape[0]}")
    if A.shape[0] == 0:
        return np.zeros_like(B)

    # 奇异性由下方主元阈值判定
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", la.LinAlgWarning)
        lu, piv = la.lu_factor(A, check_finite=True)
    floor = settings.linalg.lu_pivot_rel * frobenius(A)
    smallest = float(np.min(np.abs(np.diag(lu))))
    if smallest <= floor:
        raise SingularMatrix(f"pivot {smallest:.3e} below threshold {floor:.3e}")
    return la.lu_solve((lu, piv), B)


def sym_eig(S: np.ndarray, settings: Optional[NumericSettings] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    对称矩阵特征分解，特征值升序
    Returns:
        (eigvals, V)，V 正交且 S·V = V·diag(eigvals)
    """
    settings = numerics.resolve(settings)
    S = np.asarray(S, dtype=float)
    _require_square(S, "S")
    scale = frobenius(S)
    if frobenius(S - S.T) > settings.linalg.symmetry_rel * max(scale, 1.0):
        logger.warning(f"sym_eig received a non-symmetric matrix (asymmetry {frobenius(S - S.T):.3e}), symmetrizing")
    if S.shape[0] == 0:
        return np.zeros(0), np.zeros((0, 0))
    if scale == 0.0:
        return np.zeros(S.shape[0]), np.eye(S.shape[0])
    try:
        eigvals, V = np.linalg.eigh(symmetrize(S))
    except np.linalg.LinAlgError as e:
        raise NoConvergence(f"symmetric eigensolver failed: {e}")
    return eigvals, V


def max_eig(S: np.ndarray, settings: Optional[NumericSettings] = None) -> float:
    """对称矩阵的最大特征值"""
    eigvals, _ = sym_eig(S, settings)
    return float(eigvals[-1]) if eigvals.size else float('-inf')


def kron(A, B) -> np.ndarray:
    """Kronecker 积，标量按 1×1 矩阵处理"""
    return np.kron(np.atleast_2d(np.asarray(A, dtype=float)), np.atleast_2d(np.asarray(B, dtype=float)))


def expm(A: np.ndarray, t: float = 1.0, settings: Optional[NumericSettings] = None) -> np.ndarray:
    """
    矩阵指数 e^{At}（Padé 缩放平方）
    Raises:
        Overflow: ‖At‖_F 超过 expm_norm_limit
    """
    settings = numerics.resolve(settings)
    A = np.asarray(A, dtype=float)
    _require_square(A, "A")
    At = A * t
    size = frobenius(At)
    if size > settings.linalg.expm_norm_limit:
        raise Overflow(f"||A t||_F = {size:.3e} exceeds {settings.linalg.expm_norm_limit:.1e}")
    return la.expm(At)


def cholesky_pd(S: np.ndarray, settings: Optional[NumericSettings] = None) -> Optional[np.ndarray]:
    """
    正定性检验
    Returns:
        下三角因子 L（S = LLᵀ），不正定时返回 None
    """
    settings = numerics.resolve(settings)
    S = np.asarray(S, dtype=float)
    _require_square(S, "S")
    n = S.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    S = symmetrize(S)
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        return None
    floor = settings.linalg.pd_pivot_floor * max(float(np.trace(S)) / n, 0.0)
    if np.any(np.diag(L) <= floor):
        return None
    return L


def is_psd(S: np.ndarray, shift: float = 1e-12, settings: Optional[NumericSettings] = None) -> bool:
    """半正定检验：S + shift·I 是否通过 Cholesky"""
    S = np.asarray(S, dtype=float)
    return cholesky_pd(S + shift * np.eye(S.shape[0]), settings) is not None
