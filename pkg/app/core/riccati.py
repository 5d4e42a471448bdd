"""
连续时间 Lyapunov 与代数 Riccati 方程求解
"""
import logging
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core import matkit
from app.core.errors import (
    DimensionError,
    InitFailure,
    InvalidParameter,
    NoConvergence,
    NotStabilizing,
    SingularMatrix,
    SingularOperator,
)
from app.core.numerics import NumericSettings, numerics
from app.models.system_models import AgentModel, NoiseForm

logger = logging.getLogger(__name__)

LyapunovSide = Literal["left", "right"]


class LyapunovProblem(BaseModel):
    """
    side = "left":  AᵀX + XA + Qsym = 0
    side = "right": AX + XAᵀ + Qsym = 0
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    A: np.ndarray
    Qsym: np.ndarray
    side: LyapunovSide = "right"

    @field_validator("A", "Qsym", mode="before")
    @classmethod
    def _coerce(cls, value):
        return matkit.as_matrix(value)

    @model_validator(mode="after")
    def _check(self) -> "LyapunovProblem":
        n = self.A.shape[0]
        if self.A.shape != (n, n) or self.Qsym.shape != (n, n):
            raise DimensionError(f"Lyapunov data shapes {self.A.shape}, {self.Qsym.shape} are inconsistent")
        return self


class CareProblem(BaseModel):
    """AᵀP + PA − PB Rw⁻¹ BᵀP + Qsym + perturbation·I = 0"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    A: np.ndarray
    B: np.ndarray
    Rw: np.ndarray
    Qsym: np.ndarray
    perturbation: float = Field(0.0, ge=0)

    @field_validator("A", "B", "Rw", "Qsym", mode="before")
    @classmethod
    def _coerce(cls, value):
        return matkit.as_matrix(value)

    @model_validator(mode="after")
    def _check(self) -> "CareProblem":
        n, m = self.B.shape
        if self.A.shape != (n, n) or self.Qsym.shape != (n, n) or self.Rw.shape != (m, m):
            raise DimensionError(
                f"CARE data shapes A{self.A.shape} B{self.B.shape} Rw{self.Rw.shape} Q{self.Qsym.shape} are inconsistent"
            )
        return self

    @property
    def forcing(self) -> np.ndarray:
        return matkit.symmetrize(self.Qsym) + self.perturbation * np.eye(self.A.shape[0])


class CareSolution(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    P: np.ndarray
    K: np.ndarray
    iterations: int
    residual: float


def lyapunov_residual(A: np.ndarray, X: np.ndarray, Qsym: np.ndarray, side: LyapunovSide = "right") -> float:
    if side == "left":
        return matkit.frobenius(A.T @ X + X @ A + Qsym)
    return matkit.frobenius(A @ X + X @ A.T + Qsym)


def solve_lyapunov(problem: LyapunovProblem, settings: Optional[NumericSettings] = None) -> np.ndarray:
    """
    Kronecker 向量化求解 Lyapunov 方程
    (I⊗A + A⊗I)·vec(X) = −vec(Qsym)，vec 为列优先
    Raises:
        SingularOperator: A 与 −Aᵀ 有公共特征值
    """
    settings = numerics.resolve(settings)
    A = problem.A if problem.side == "right" else problem.A.T
    n = A.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    I = np.eye(n)
    operator = matkit.kron(I, A) + matkit.kron(A, I)
    rhs = -problem.Qsym.reshape(-1, order='F')
    try:
        vec_x = matkit.lu_solve(operator, rhs, settings)
    except SingularMatrix as e:
        raise SingularOperator(f"Lyapunov operator is singular: {e}")
    X = matkit.symmetrize(vec_x.reshape((n, n), order='F'))

    residual = lyapunov_residual(problem.A, X, problem.Qsym, problem.side)
    bound = settings.lyapunov.residual_rel * (1.0 + matkit.frobenius(problem.Qsym))
    if not np.isfinite(residual) or residual > bound:
        raise SingularOperator(f"Lyapunov residual {residual:.3e} exceeds {bound:.3e} (operator near singular)")
    return X


def is_hurwitz(A: np.ndarray, settings: Optional[NumericSettings] = None) -> bool:
    """Lyapunov 证书：AᵀX + XA + I = 0 有正定解当且仅当 A 为 Hurwitz"""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    if n == 0:
        return True
    try:
        X = solve_lyapunov(LyapunovProblem(A=A, Qsym=np.eye(n), side="left"), settings)
    except SingularOperator:
        return False
    return matkit.cholesky_pd(X, settings) is not None


def care_residual(problem: CareProblem, P: np.ndarray) -> float:
    A, B = problem.A, problem.B
    gain_term = P @ B @ matkit.lu_solve(problem.Rw, B.T @ P)
    return matkit.frobenius(A.T @ P + P @ A - gain_term + problem.forcing)


def _bass_gain(problem: CareProblem, settings: NumericSettings) -> np.ndarray:
    """Bass 构造初始镇定增益 K₀ = BᵀZ⁻¹，失败时 β 加倍重试"""
    A, B = problem.A, problem.B
    n, m = B.shape
    if is_hurwitz(A, settings):
        return np.zeros((m, n))

    beta = matkit.frobenius(A) + 1.0
    for attempt in range(settings.riccati.bass_retries + 1):
        shifted = -(A + beta * np.eye(n))
        try:
            Z = solve_lyapunov(LyapunovProblem(A=shifted, Qsym=2.0 * B @ B.T, side="right"), settings)
            K0 = matkit.lu_solve(Z, B).T
        except (SingularOperator, SingularMatrix) as e:
            logger.warning(f"Bass initialization failed at beta={beta:.3g} (attempt {attempt + 1}): {e}")
            beta *= 2.0
            continue
        if is_hurwitz(A - B @ K0, settings):
            return K0
        logger.warning(f"Bass gain at beta={beta:.3g} is not stabilizing, doubling beta")
        beta *= 2.0
    raise InitFailure("no stabilizing initial gain found; (A, B) may not be stabilizable")


def solve_care(problem: CareProblem, settings: Optional[NumericSettings] = None) -> CareSolution:
    """
    Newton–Kleinman 迭代求稳定化解
    Raises:
        InitFailure: 无法得到镇定初始增益
        NoConvergence: 超过最大迭代次数
        NotStabilizing: 最终闭环不满足 Hurwitz 证书
    """
    settings = numerics.resolve(settings)
    opts = settings.riccati
    A, B, Rw = problem.A, problem.B, matkit.symmetrize(problem.Rw)
    if matkit.cholesky_pd(Rw, settings) is None:
        raise InvalidParameter("CARE weight Rw must be positive definite")
    forcing = problem.forcing

    K = _bass_gain(problem, settings)
    P_prev = None
    for iteration in range(1, opts.max_iter + 1):
        Ak = A - B @ K
        try:
            P = solve_lyapunov(LyapunovProblem(A=Ak, Qsym=K.T @ Rw @ K + forcing, side="left"), settings)
        except SingularOperator as e:
            raise NotStabilizing(f"Newton iterate {iteration} lost stability: {e}")
        K = matkit.lu_solve(Rw, B.T @ P, settings)
        if P_prev is not None:
            step = matkit.frobenius(P - P_prev)
            logger.debug(f"Newton step {iteration}: ||dP||_F = {step:.3e}")
            if step <= opts.step_tol * (1.0 + matkit.frobenius(P_prev)):
                break
        P_prev = P
    else:
        raise NoConvergence(f"Newton-Kleinman did not converge in {opts.max_iter} steps")

    residual = care_residual(problem, P)
    if residual > opts.residual_tol * (1.0 + matkit.frobenius(P) ** 2):
        raise NoConvergence(f"CARE residual {residual:.3e} above tolerance")
    if not is_hurwitz(A - B @ K, settings):
        raise NotStabilizing("closed loop A - B Rw^-1 B^T P fails the Hurwitz certificate")
    # 强迫项正定时解必须正定；否则只要求半正定
    if matkit.cholesky_pd(forcing, settings) is not None:
        if matkit.cholesky_pd(P, settings) is None:
            raise NotStabilizing("CARE solution is not positive definite")
    elif not matkit.is_psd(P, 1e-12 * (1.0 + matkit.frobenius(P)), settings):
        raise NotStabilizing("CARE solution is not positive semidefinite")

    logger.info(f"CARE solved in {iteration} Newton steps, residual {residual:.2e}")
    return CareSolution(P=P, K=K, iterations=iteration, residual=residual)


def noise_term(model: AgentModel, noise_form: NoiseForm) -> np.ndarray:
    """观测 Riccati 的噪声项 EEᵀ 或 EᵀE"""
    if noise_form == "EEt":
        return model.E @ model.E.T
    if model.q != model.n:
        raise DimensionError(f"noise form EtE needs a square E (n = q), got E of shape {model.E.shape}")
    return model.E.T @ model.E


def observer_problem(model: AgentModel, eps: float, noise_form: NoiseForm) -> CareProblem:
    """对偶问题 (Aᵀ, C₁ᵀ, I_r, N, ε)"""
    if eps <= 0:
        raise InvalidParameter(f"eps must be positive, got {eps}")
    return CareProblem(A=model.A.T, B=model.C1.T, Rw=np.eye(model.r), Qsym=noise_term(model, noise_form), perturbation=eps)


def observer_riccati(
    model: AgentModel,
    eps: float,
    noise_form: NoiseForm = "EEt",
    settings: Optional[NumericSettings] = None,
) -> np.ndarray:
    """
    求解 AQ + QAᵀ − QC₁ᵀC₁Q + N + εI = 0
    Returns:
        正定 Q，且 A − QC₁ᵀC₁ 为 Hurwitz
    """
    solution = solve_care(observer_problem(model, eps, noise_form), settings)
    return solution.P


def observer_residual(model: AgentModel, eps: float, noise_form: NoiseForm, Q: np.ndarray) -> float:
    return care_residual(observer_problem(model, eps, noise_form), Q)
