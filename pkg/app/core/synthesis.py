"""
分布式协议综合：由智能体模型、连通图与 γ 计算 F、G 及设计证书
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_serializer
from tqdm import tqdm

from app.core import graphs, matkit, riccati
from app.core.errors import (
    AllInfeasible,
    Disconnected,
    H2NetError,
    InfeasibleDesign,
    InvalidParameter,
    InvalidSpectrum,
    NormalizationFailed,
    NotSynchronizing,
)
from app.core.numerics import NumericSettings, numerics
from app.models.graph_models import GraphSpectrum, WeightedGraph
from app.models.system_models import (
    AgentModel,
    CaseSelect,
    DesignParams,
    NoiseForm,
    NormalizationReport,
    ProtocolGains,
)

logger = logging.getLogger(__name__)


class CRange(BaseModel):
    """c 的容许区间：case_i 左闭右开，case_ii 开区间"""
    case: CaseSelect
    lower: float
    upper: float
    lower_closed: bool

    def contains(self, c: float) -> bool:
        above = c >= self.lower if self.lower_closed else c > self.lower
        return above and c < self.upper

    def describe(self) -> str:
        left = "[" if self.lower_closed else "("
        return f"{left}{self.lower:.6g}, {self.upper:.6g})"


class DesignCertificate(BaseModel):
    """设计证书：Riccati 解、参数、界与 Hurwitz 检查"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    P: np.ndarray
    Q: np.ndarray
    params: DesignParams
    lambda2: float
    lambdaN: float
    node_count: int
    S_value: float
    bound_total: float
    riccati_residuals: Tuple[float, float]
    modal_hurwitz: List[bool]
    modal_inequality_max_eig: List[float]
    observer_hurwitz: bool
    feasible: bool
    # 情形 ii 时为 (g(λ₂), g(λ_N))
    weight_ordering: Optional[Tuple[float, float]] = None

    @property
    def margin(self) -> float:
        return self.params.gamma - self.bound_total

    @field_serializer("P", "Q")
    def _serialize(self, value: np.ndarray):
        return value.tolist()


class DesignResult(BaseModel):
    gains: ProtocolGains
    certificate: DesignCertificate

    def to_json_dict(self) -> dict:
        data = self.gains.model_dump()
        certificate = self.certificate.model_dump()
        certificate["margin"] = self.certificate.margin
        data["certificate"] = certificate
        return data


def check_normalization(model: AgentModel, settings: Optional[NumericSettings] = None) -> NormalizationReport:
    """检查 D₁Eᵀ = 0, D₂ᵀC₂ = 0, D₁D₁ᵀ = I_r, D₂ᵀD₂ = I_m"""
    settings = numerics.resolve(settings)
    tol = settings.certificates.normalization_tol

    def deviation(M: np.ndarray) -> float:
        return float(np.max(np.abs(M))) if M.size else 0.0

    deviations = {
        "D1_Et": deviation(model.D1 @ model.E.T),
        "D2t_C2": deviation(model.D2.T @ model.C2),
        "D1_D1t_minus_I": deviation(model.D1 @ model.D1.T - np.eye(model.r)),
        "D2t_D2_minus_I": deviation(model.D2.T @ model.D2 - np.eye(model.m)),
    }
    return NormalizationReport(
        d1_et_zero=deviations["D1_Et"] <= tol,
        d2t_c2_zero=deviations["D2t_C2"] <= tol,
        d1_d1t_identity=deviations["D1_D1t_minus_I"] <= tol,
        d2t_d2_identity=deviations["D2t_D2_minus_I"] <= tol,
        deviations=deviations,
    )


def case_threshold(lambda2: float, lambdaN: float) -> float:
    """两种情形的分界 2/(λ₂² + λ₂λ_N + λ_N²)"""
    return 2.0 / (lambda2 ** 2 + lambda2 * lambdaN + lambdaN ** 2)


def admissible_c_range(lambda2: float, lambdaN: float, case_select: CaseSelect) -> CRange:
    """
    c 的容许区间
        case_i:  [2/(λ₂²+λ₂λ_N+λ_N²), 2/λ_N²)
        case_ii: (0, 2/(λ₂²+λ₂λ_N+λ_N²))
    """
    if not (lambda2 > 0 and lambdaN >= lambda2):
        raise InvalidSpectrum(f"need 0 < lambda2 <= lambdaN, got lambda2={lambda2}, lambdaN={lambdaN}")
    threshold = case_threshold(lambda2, lambdaN)
    if case_select == "case_ii":
        return CRange(case="case_ii", lower=0.0, upper=threshold, lower_closed=False)
    return CRange(case="case_i", lower=threshold, upper=2.0 / lambdaN ** 2, lower_closed=True)


def weight_polynomial(c: float, lam: float) -> float:
    """g(λ) = c²λ³ − 2cλ，R(c) = −1/g(λ★)"""
    return c ** 2 * lam ** 3 - 2.0 * c * lam


def check_case_ii_ordering(c: float, lambda2: float, lambdaN: float) -> Tuple[float, float]:
    """
    情形 ii 要求 g(λ_N) < g(λ₂) < 0
    Returns:
        (g(λ₂), g(λ_N))
    Raises:
        InvalidParameter: 次序不成立
    """
    g2 = weight_polynomial(c, lambda2)
    gN = weight_polynomial(c, lambdaN)
    if lambdaN > lambda2 and not gN < g2 < 0.0:
        raise InvalidParameter(f"c = {c:.6g} violates g(lambda_N) < g(lambda_2) < 0 (g = {gN:.6g}, {g2:.6g})")
    if lambdaN == lambda2 and not g2 < 0.0:
        raise InvalidParameter(f"c = {c:.6g} gives g(lambda_2) = {g2:.6g} >= 0")
    return g2, gN


def riccati_weight(c: float, lambda_star: float) -> float:
    """R(c) = 1/(−c²λ★³ + 2cλ★)"""
    denominator = -weight_polynomial(c, lambda_star)
    if denominator <= 0:
        raise InvalidParameter(f"c = {c:.6g} makes R(c) non-positive for lambda = {lambda_star:.6g}")
    return 1.0 / denominator


def bound_S(P: np.ndarray, Q: np.ndarray, lambdaN: float, C1: np.ndarray, C2: np.ndarray) -> float:
    """S(P,Q) = tr(C₁QPQC₁ᵀ) + λ_N·tr(C₂QC₂ᵀ)"""
    C1Q = C1 @ Q
    return float(np.trace(C1Q @ P @ C1Q.T) + lambdaN * np.trace(C2 @ Q @ C2.T))


def resolve_params(spec: GraphSpectrum, params: DesignParams) -> DesignParams:
    """把 c = auto 与 case = auto 解析为具体值"""
    lambda2, lambdaN = spec.lambda2, spec.lambdaN
    if params.c is None:
        case = "case_i" if params.case_select == "auto" else params.case_select
        if case == "case_ii":
            raise InvalidParameter("c = auto is only defined for case i; give an explicit c for case ii")
        c = admissible_c_range(lambda2, lambdaN, "case_i").lower
        return params.model_copy(update={"c": c, "case_select": "case_i"})

    c = params.c
    if params.case_select == "auto":
        for case in ("case_i", "case_ii"):
            if admissible_c_range(lambda2, lambdaN, case).contains(c):
                return params.model_copy(update={"case_select": case})
        raise InvalidParameter(f"c = {c:.6g} is outside both admissible intervals (need 0 < c < {2.0 / lambdaN ** 2:.6g})")

    interval = admissible_c_range(lambda2, lambdaN, params.case_select)
    if not interval.contains(c):
        raise InvalidParameter(f"c = {c:.6g} is outside the {params.case_select} interval {interval.describe()}")
    return params


def modal_inequality(model: AgentModel, P: np.ndarray, F: np.ndarray, lam: float) -> np.ndarray:
    """(A+λBF)ᵀP + P(A+λBF) + CᵢᵀCᵢ，Cᵢ = √λC₂ + λ√λD₂F"""
    Acl = model.A + lam * model.B @ F
    Ci = math.sqrt(lam) * model.C2 + lam * math.sqrt(lam) * model.D2 @ F
    return Acl.T @ P + P @ Acl + Ci.T @ Ci


def _validate_inputs(model: AgentModel, graph: WeightedGraph, settings: NumericSettings) -> GraphSpectrum:
    report = check_normalization(model, settings)
    if not report.all_ok:
        raise NormalizationFailed(f"model violates normalization: {', '.join(report.failed())}")
    if graph.node_count < 2 or not graphs.is_connected(graph):
        raise Disconnected("communication graph must be connected with at least two nodes")
    return graphs.spectrum(graph, settings)


def synthesize(
    model: AgentModel,
    graph: WeightedGraph,
    params: DesignParams,
    settings: Optional[NumericSettings] = None,
) -> DesignResult:
    """
    计算 F = −cBᵀP, G = QC₁ᵀ 并填写证书
    Raises:
        InfeasibleDesign: (N−1)·S(P,Q) ≥ γ，异常中携带证书
        NotSynchronizing: 某个 Hurwitz 证书失败
        NormalizationFailed / Disconnected / InvalidParameter
    """
    settings = numerics.resolve(settings)
    spec = _validate_inputs(model, graph, settings)
    resolved = resolve_params(spec, params)
    c = resolved.c
    lambda2, lambdaN = spec.lambda2, spec.lambdaN
    lambda_star = lambdaN if resolved.case_select == "case_i" else lambda2
    ordering = check_case_ii_ordering(c, lambda2, lambdaN) if resolved.case_select == "case_ii" else None
    logger.info(
        f"Designing with c={c:.6g} ({resolved.case_select}), eps={resolved.eps:g}, sigma={resolved.sigma:g}, "
        f"noise_form={resolved.noise_form}, lambda2={lambda2:.6g}, lambdaN={lambdaN:.6g}"
    )

    # 观测 Riccati
    Q = riccati.observer_riccati(model, resolved.eps, resolved.noise_form, settings)
    q_residual = riccati.observer_residual(model, resolved.eps, resolved.noise_form, Q)

    # 状态 Riccati，Rw = R(c)·I_m
    weight = riccati_weight(c, lambda_star)
    problem = riccati.CareProblem(
        A=model.A,
        B=model.B,
        Rw=weight * np.eye(model.m),
        Qsym=lambdaN * model.C2.T @ model.C2,
        perturbation=resolved.sigma,
    )
    solution = riccati.solve_care(problem, settings)
    P = solution.P

    F = -c * model.B.T @ P
    G = Q @ model.C1.T
    gains = ProtocolGains(F=F, G=G)

    margin = settings.certificates.strict_margin
    modal_hurwitz = [riccati.is_hurwitz(model.A + lam * model.B @ F, settings) for lam in spec.modes]
    observer_hurwitz = riccati.is_hurwitz(model.A - G @ model.C1, settings)
    inequality_eigs = []
    for lam in spec.modes:
        M = modal_inequality(model, P, F, lam)
        inequality_eigs.append(matkit.max_eig(M, settings))

    S_value = bound_S(P, Q, lambdaN, model.C1, model.C2)
    bound_total = (graph.node_count - 1) * S_value
    certificate = DesignCertificate(
        P=P,
        Q=Q,
        params=resolved,
        lambda2=lambda2,
        lambdaN=lambdaN,
        node_count=graph.node_count,
        S_value=S_value,
        bound_total=bound_total,
        riccati_residuals=(solution.residual, q_residual),
        modal_hurwitz=modal_hurwitz,
        modal_inequality_max_eig=inequality_eigs,
        observer_hurwitz=observer_hurwitz,
        feasible=False,
        weight_ordering=ordering,
    )

    if not (all(modal_hurwitz) and observer_hurwitz):
        raise NotSynchronizing("designed gains fail a Hurwitz certificate", detail=certificate)
    for lam, value in zip(spec.modes, inequality_eigs):
        norm = matkit.frobenius(modal_inequality(model, P, F, lam))
        if not value < -margin * max(norm, 1.0):
            raise NotSynchronizing(f"modal Lyapunov inequality fails at lambda={lam:.6g} (max eig {value:.3e})", detail=certificate)

    if bound_total >= resolved.gamma:
        logger.info(f"Design infeasible: bound {bound_total:.6g} >= gamma {resolved.gamma:.6g}")
        raise InfeasibleDesign(bound_total, resolved.gamma, gains=gains, certificate=certificate)

    certificate.feasible = True
    logger.info(f"Design feasible: bound {bound_total:.6g} < gamma {resolved.gamma:.6g}")
    return DesignResult(gains=gains, certificate=certificate)


class SweepOutcome(BaseModel):
    """扫描结果：最优设计与逐点记录"""
    best: DesignResult
    evaluated: int
    feasible: int
    records: List[Dict]


def sweep(
    model: AgentModel,
    graph: WeightedGraph,
    gamma: float,
    c_grid: Sequence[Optional[float]],
    eps_grid: Sequence[float],
    sigma_grid: Sequence[float],
    case_select: CaseSelect = "auto",
    noise_form: NoiseForm = "EEt",
    workers: int = 1,
    progress: bool = False,
    settings: Optional[NumericSettings] = None,
) -> SweepOutcome:
    """
    对 (c, ε, σ) 网格逐点综合，返回 bound_total 最小的可行设计
    Raises:
        AllInfeasible: 没有可行点，携带最小达到界
    """
    settings = numerics.resolve(settings)
    if not (c_grid and eps_grid and sigma_grid):
        raise InvalidParameter("sweep grids must be nonempty")
    spec = _validate_inputs(model, graph, settings)
    grid = list(product(c_grid, eps_grid, sigma_grid))
    # 预先校验 c 落在容许区间
    points = [
        DesignParams(gamma=gamma, c=c, case_select=case_select, eps=eps, sigma=sigma, noise_form=noise_form)
        for c, eps, sigma in grid
    ]
    for point in points:
        resolve_params(spec, point)

    def evaluate(point: DesignParams):
        try:
            return synthesize(model, graph, point, settings), None
        except InfeasibleDesign as e:
            return None, e
        except H2NetError as e:
            logger.warning(f"Sweep point c={point.c}, eps={point.eps}, sigma={point.sigma} failed: {e}")
            return None, e

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            outcomes = list(tqdm(executor.map(evaluate, points), total=len(points), disable=not progress, desc="sweep"))
    else:
        outcomes = [evaluate(point) for point in tqdm(points, disable=not progress, desc="sweep")]

    best: Optional[DesignResult] = None
    smallest_bound: Optional[float] = None
    records = []
    for point, (result, error) in zip(points, outcomes):
        bound = None
        if result is not None:
            bound = result.certificate.bound_total
            # 严格小于：并列时保留网格顺序靠前者
            if best is None or bound < best.certificate.bound_total:
                best = result
        elif isinstance(error, InfeasibleDesign):
            bound = error.bound
        if bound is not None and (smallest_bound is None or bound < smallest_bound):
            smallest_bound = bound
        records.append({
            "c": point.c,
            "eps": point.eps,
            "sigma": point.sigma,
            "bound_total": bound,
            "feasible": result is not None,
            "error": None if error is None else str(error),
        })

    if best is None:
        raise AllInfeasible(smallest_bound, gamma, failures=len(points))
    feasible = sum(1 for record in records if record["feasible"])
    logger.info(f"Sweep finished: {feasible}/{len(points)} feasible, best bound {best.certificate.bound_total:.6g}")
    return SweepOutcome(best=best, evaluated=len(points), feasible=feasible, records=records)
