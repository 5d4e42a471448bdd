"""
闭环组装、H₂ 代价的模态分解计算、同步验证与单系统次优设计
"""
import logging
import math
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.config.settings import DEFAULT_QUADRATURE_DT, DEFAULT_QUADRATURE_T
from app.core import graphs, matkit, riccati
from app.core.errors import (
    InfeasibleDesign,
    InvalidParameter,
    InvalidSpectrum,
    NormalizationFailed,
    NotStabilizing,
    NotSynchronizing,
    Unstable,
)
from app.core.numerics import NumericSettings, numerics
from app.models.graph_models import GraphSpectrum, WeightedGraph
from app.models.system_models import AgentModel, NoiseForm, ProtocolGains

logger = logging.getLogger(__name__)

Gramian = Literal["controllability", "observability"]


class ClosedLoopNetwork(BaseModel):
    """受控网络 (A_e, E_e, C_e)，状态顺序为 (x, w)"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    Ae: np.ndarray
    Ee: np.ndarray
    Ce: np.ndarray


class ModalBlock(BaseModel):
    """第 i 个模态闭环 (Ā_i, Ē_i, C̄_i)"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    lambda_i: float
    Abar: np.ndarray
    Ebar: np.ndarray
    Cbar: np.ndarray


class ModeStatus(BaseModel):
    lambda_i: float
    state_feedback_hurwitz: bool


class SyncReport(BaseModel):
    synchronizing: bool
    modes: List[ModeStatus]
    observer_hurwitz: bool


class CostReport(BaseModel):
    """逐模态代价 J_i 与总代价 J(F,G)"""
    per_mode: List[Tuple[float, float]]
    total: float
    quadrature_estimate: Optional[float] = None
    relative_gap: Optional[float] = None
    gamma: Optional[float] = None
    bound: Optional[float] = None
    suboptimal: Optional[bool] = None


def _checked_gains(model: AgentModel, gains: ProtocolGains) -> ProtocolGains:
    return gains.check_against(model)


def closed_loop_network(
    model: AgentModel,
    graph: WeightedGraph,
    gains: ProtocolGains,
    spec: Optional[GraphSpectrum] = None,
) -> ClosedLoopNetwork:
    """
    组装
        A_e = [[I⊗A, I⊗BF], [L⊗GC₁, I⊗(A−GC₁) + L⊗BF]]
        E_e = [[I⊗E], [L⊗GD₁]]
        C_e = [W^{1/2}Rᵀ⊗C₂, W^{1/2}Rᵀ⊗D₂F]
    """
    gains = _checked_gains(model, gains)
    spec = spec or graphs.spectrum(graph)
    F, G = gains.F, gains.G
    N = graph.node_count
    I_N = np.eye(N)
    L = spec.L
    factor = spec.incidence_factor

    BF = model.B @ F
    GC1 = G @ model.C1
    Ae = np.block([
        [matkit.kron(I_N, model.A), matkit.kron(I_N, BF)],
        [matkit.kron(L, GC1), matkit.kron(I_N, model.A - GC1) + matkit.kron(L, BF)],
    ])
    Ee = np.vstack([matkit.kron(I_N, model.E), matkit.kron(L, G @ model.D1)])
    Ce = np.hstack([matkit.kron(factor, model.C2), matkit.kron(factor, model.D2 @ F)])
    # 无边图时 kron 给出 0 行，保持列数
    Ce = Ce.reshape(graph.edge_count * model.p, 2 * N * model.n)
    return ClosedLoopNetwork(Ae=Ae, Ee=Ee, Ce=Ce)


def modal_blocks(model: AgentModel, lambda_i: float, gains: ProtocolGains) -> ModalBlock:
    """Ā = [[A, λBF], [GC₁, A−GC₁+λBF]], Ē = [E; GD₁], C̄ = [√λC₂, λ√λD₂F]"""
    if not lambda_i > 0:
        raise InvalidSpectrum(f"modal blocks need lambda_i > 0, got {lambda_i}")
    gains = _checked_gains(model, gains)
    F, G = gains.F, gains.G
    BF = model.B @ F
    GC1 = G @ model.C1
    Abar = np.block([
        [model.A, lambda_i * BF],
        [GC1, model.A - GC1 + lambda_i * BF],
    ])
    Ebar = np.vstack([model.E, G @ model.D1])
    root = math.sqrt(lambda_i)
    Cbar = np.hstack([root * model.C2, lambda_i * root * model.D2 @ F])
    return ModalBlock(lambda_i=lambda_i, Abar=Abar, Ebar=Ebar, Cbar=Cbar)


def separation_form(model: AgentModel, lambda_i: float, gains: ProtocolGains) -> ModalBlock:
    """
    (ω, e) 坐标下的模态闭环，e = ω − ξ
        [[A+λBF, −GC₁], [0, A−GC₁]]
    与 modal_blocks 相似，脉冲响应相同
    """
    block = modal_blocks(model, lambda_i, gains)
    I = np.eye(model.n)
    Z = np.zeros((model.n, model.n))
    # (ω, e) = T (ξ, ω)
    T = np.block([[Z, I], [-I, I]])
    T_inv = np.block([[I, -I], [I, Z]])
    return ModalBlock(
        lambda_i=lambda_i,
        Abar=T @ block.Abar @ T_inv,
        Ebar=T @ block.Ebar,
        Cbar=block.Cbar @ T_inv,
    )


def h2_norm_squared(
    A: np.ndarray,
    E: np.ndarray,
    C: np.ndarray,
    gramian: Gramian = "controllability",
    settings: Optional[NumericSettings] = None,
) -> float:
    """
    ∫ tr(Tᵀ(t)T(t)) dt，T(t) = C e^{At} E
        controllability: tr(C X Cᵀ)，AX + XAᵀ + EEᵀ = 0
        observability:   tr(Eᵀ Y E)，AᵀY + YA + CᵀC = 0
    """
    settings = numerics.resolve(settings)
    if not riccati.is_hurwitz(A, settings):
        raise Unstable("system matrix fails the Hurwitz certificate; H2 cost is undefined")
    if gramian == "observability":
        Y = riccati.solve_lyapunov(riccati.LyapunovProblem(A=A, Qsym=C.T @ C, side="left"), settings)
        return float(np.trace(E.T @ Y @ E))
    X = riccati.solve_lyapunov(riccati.LyapunovProblem(A=A, Qsym=E @ E.T, side="right"), settings)
    return float(np.trace(C @ X @ C.T))


def modal_cost(
    model: AgentModel,
    lambda_i: float,
    gains: ProtocolGains,
    settings: Optional[NumericSettings] = None,
) -> float:
    """J_i = tr(C̄ X C̄ᵀ)，ĀX + XĀᵀ + ĒĒᵀ = 0"""
    block = modal_blocks(model, lambda_i, gains)
    return h2_norm_squared(block.Abar, block.Ebar, block.Cbar, "controllability", settings)


def verify_synchronizing(
    model: AgentModel,
    graph: WeightedGraph,
    gains: ProtocolGains,
    settings: Optional[NumericSettings] = None,
) -> SyncReport:
    """A + λᵢBF (i ≥ 2) 与 A − GC₁ 均为 Hurwitz 时同步"""
    settings = numerics.resolve(settings)
    gains = _checked_gains(model, gains)
    spec = graphs.spectrum(graph, settings)
    modes = [
        ModeStatus(lambda_i=lam, state_feedback_hurwitz=riccati.is_hurwitz(model.A + lam * model.B @ gains.F, settings))
        for lam in spec.modes
    ]
    observer_ok = riccati.is_hurwitz(model.A - gains.G @ model.C1, settings)
    # λ₂ = 0 表示图不连通，同步不可能
    connected = all(mode.lambda_i > 0 for mode in modes)
    synchronizing = connected and observer_ok and all(mode.state_feedback_hurwitz for mode in modes)
    return SyncReport(synchronizing=synchronizing, modes=modes, observer_hurwitz=observer_ok)


def network_cost(
    model: AgentModel,
    graph: WeightedGraph,
    gains: ProtocolGains,
    gamma: Optional[float] = None,
    settings: Optional[NumericSettings] = None,
) -> CostReport:
    """J(F,G) = Σ_{i≥2} J_i(F,G)，按 λ 升序求和"""
    settings = numerics.resolve(settings)
    report = verify_synchronizing(model, graph, gains, settings)
    if not report.synchronizing:
        raise NotSynchronizing("protocol does not synchronize the network", detail=report)
    per_mode = [(mode.lambda_i, modal_cost(model, mode.lambda_i, gains, settings)) for mode in report.modes]
    total = float(sum(cost for _, cost in per_mode))
    suboptimal = None if gamma is None else total < gamma
    return CostReport(per_mode=per_mode, total=total, gamma=gamma, suboptimal=suboptimal)


def _simpson(values: np.ndarray, dt: float) -> float:
    weights = np.ones(values.size)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return float(dt / 3.0 * np.dot(weights, values))


def impulse_cost_quadrature(
    model: AgentModel,
    graph: WeightedGraph,
    gains: ProtocolGains,
    horizon: float = DEFAULT_QUADRATURE_T,
    dt: float = DEFAULT_QUADRATURE_DT,
    settings: Optional[NumericSettings] = None,
) -> float:
    """
    Simpson 积分 ∫₀^T tr(Tᵀ(t)T(t)) dt，T(t) = C_e e^{A_e t} E_e
    在完整网络上计算，作为模态和的独立校验
    """
    settings = numerics.resolve(settings)
    if horizon <= 0 or dt <= 0 or dt > horizon:
        raise InvalidParameter(f"quadrature needs 0 < dt <= T, got T={horizon}, dt={dt}")
    if not verify_synchronizing(model, graph, gains, settings).synchronizing:
        raise NotSynchronizing("protocol does not synchronize the network")
    network = closed_loop_network(model, graph, gains)
    steps = int(round(horizon / dt))
    steps += steps % 2
    h = horizon / steps

    # e^{A_e h} 一次计算，逐步推进 X_k = e^{A_e kh} E_e
    step_matrix = matkit.expm(network.Ae, h, settings)
    X = network.Ee.copy()
    values = np.empty(steps + 1)
    for k in range(steps + 1):
        Y = network.Ce @ X
        values[k] = float(np.sum(Y * Y))
        X = step_matrix @ X
    return _simpson(values, h)


def quadrature_self_check(
    model: AgentModel,
    graph: WeightedGraph,
    gains: ProtocolGains,
    horizon: float = DEFAULT_QUADRATURE_T,
    dt: float = DEFAULT_QUADRATURE_DT,
    settings: Optional[NumericSettings] = None,
) -> Tuple[float, float, float]:
    """步长减半的自洽检查，返回 (估计值, 减半步长估计值, 相对变化)"""
    coarse = impulse_cost_quadrature(model, graph, gains, horizon, dt, settings)
    fine = impulse_cost_quadrature(model, graph, gains, horizon, dt / 2.0, settings)
    change = abs(fine - coarse) / max(abs(fine), 1e-300)
    if change > 1e-6:
        logger.warning(f"Quadrature changed by {change:.2e} when halving dt; consider a smaller step")
    return coarse, fine, change


class SingleLoopResult(BaseModel):
    """单系统次优设计结果"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    gains: ProtocolGains
    P: np.ndarray
    Q: np.ndarray
    bound: float
    cost: float
    gamma: float
    state_feedback_hurwitz: bool
    observer_hurwitz: bool


def single_loop_design(
    model: AgentModel,
    gamma: float,
    eps: float = 1e-3,
    sigma: float = 1e-3,
    noise_form: NoiseForm = "EEt",
    settings: Optional[NumericSettings] = None,
) -> SingleLoopResult:
    """
    单系统分离原理设计
        F = −(D₂ᵀD₂)⁻¹BᵀP，G = QC₁ᵀ
    bound = tr(C₁QPQC₁ᵀ) + tr(C₂QC₂ᵀ) 必须小于 γ
    """
    settings = numerics.resolve(settings)
    tol = settings.certificates.normalization_tol
    if gamma <= 0:
        raise InvalidParameter(f"gamma must be positive, got {gamma}")
    checks = {
        "D1 E^T = 0": np.max(np.abs(model.D1 @ model.E.T), initial=0.0) <= tol,
        "D2^T C2 = 0": np.max(np.abs(model.D2.T @ model.C2), initial=0.0) <= tol,
        "D1 D1^T = I": np.max(np.abs(model.D1 @ model.D1.T - np.eye(model.r)), initial=0.0) <= tol,
    }
    failed = [name for name, ok in checks.items() if not ok]
    if failed:
        raise NormalizationFailed(f"single-loop design needs {', '.join(failed)}")
    Rw = model.D2.T @ model.D2
    if matkit.cholesky_pd(Rw, settings) is None:
        raise NormalizationFailed("single-loop design needs D2^T D2 > 0")

    Q = riccati.observer_riccati(model, eps, noise_form, settings)
    solution = riccati.solve_care(
        riccati.CareProblem(A=model.A, B=model.B, Rw=Rw, Qsym=model.C2.T @ model.C2, perturbation=sigma),
        settings,
    )
    P = solution.P
    F = -matkit.lu_solve(Rw, model.B.T @ P, settings)
    G = Q @ model.C1.T
    gains = ProtocolGains(F=F, G=G)

    C1Q = model.C1 @ Q
    bound = float(np.trace(C1Q @ P @ C1Q.T) + np.trace(model.C2 @ Q @ model.C2.T))
    if bound >= gamma:
        raise InfeasibleDesign(bound, gamma, gains=gains)

    state_ok = riccati.is_hurwitz(model.A + model.B @ F, settings)
    observer_ok = riccati.is_hurwitz(model.A - G @ model.C1, settings)
    if not (state_ok and observer_ok):
        raise NotStabilizing("single-loop controller does not internally stabilize the plant")

    BF = model.B @ F
    GC1 = G @ model.C1
    Aa = np.block([[model.A, BF], [GC1, model.A + BF - GC1]])
    Ea = np.vstack([model.E, G @ model.D1])
    Ca = np.hstack([model.C2, model.D2 @ F])
    cost = h2_norm_squared(Aa, Ea, Ca, "controllability", settings)
    logger.info(f"Single-loop design: bound {bound:.6g}, exact cost {cost:.6g}, gamma {gamma:.6g}")
    return SingleLoopResult(
        gains=gains,
        P=P,
        Q=Q,
        bound=bound,
        cost=cost,
        gamma=gamma,
        state_feedback_hurwitz=state_ok,
        observer_hurwitz=observer_ok,
    )
