"""
受控网络时域仿真：RK4 积分、扰动场景、同步误差统计
"""
import json
import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.spatial.distance import pdist
from tqdm import tqdm

from app.config.settings import DEFAULT_PULSE_WIDTH
from app.core import graphs
from app.core.errors import DimensionError, Diverged, InvalidParameter
from app.core.h2cert import closed_loop_network
from app.core.numerics import NumericSettings, numerics
from app.models.graph_models import GraphSpectrum, WeightedGraph
from app.models.system_models import AgentModel, ProtocolGains

logger = logging.getLogger(__name__)

DynamicsForm = Literal["observer", "compact"]


class Disturbance(BaseModel):
    """
    外部扰动 d(t)
        none:  d ≡ 0
        pulse: 在 (agent, component) 通道上宽度 width、高度 height（默认 1/width）的矩形脉冲
        table: 分段常数，times 升序，values[k] 为 N×q
    """
    type: Literal["none", "pulse", "table"] = "none"
    agent: int = Field(0, ge=0)
    component: int = Field(0, ge=0)
    start: float = Field(0.0, ge=0)
    width: float = Field(DEFAULT_PULSE_WIDTH, gt=0)
    height: Optional[float] = None
    times: List[float] = Field(default_factory=list)
    values: List[List[List[float]]] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check(self) -> "Disturbance":
        if self.type == "table":
            if len(self.times) != len(self.values) or not self.times:
                raise InvalidParameter("disturbance table needs one value block per time stamp")
            if any(b < a for a, b in zip(self.times, self.times[1:])):
                raise InvalidParameter("disturbance table times must be sorted")
        return self

    @property
    def amplitude(self) -> float:
        return self.height if self.height is not None else 1.0 / self.width

    def check_against(self, node_count: int, q: int):
        if self.type == "pulse" and (self.agent >= node_count or self.component >= q):
            raise DimensionError(
                f"pulse channel ({self.agent}, {self.component}) outside {node_count} agents x {q} components"
            )
        if self.type == "table":
            shape = np.asarray(self.values, dtype=float).shape
            if shape[1:] != (node_count, q):
                raise DimensionError(f"disturbance table blocks have shape {shape[1:]}, expected {(node_count, q)}")

    def sample(self, t: float, node_count: int, q: int) -> np.ndarray:
        d = np.zeros((node_count, q))
        if self.type == "pulse":
            if self.start <= t < self.start + self.width:
                d[self.agent, self.component] = self.amplitude
        elif self.type == "table":
            k = int(np.searchsorted(self.times, t, side="right")) - 1
            if k >= 0:
                d[:] = self.values[k]
        return d


class Scenario(BaseModel):
    """仿真场景：初始状态、扰动、时长与步长"""
    model_config = ConfigDict(arbitrary_types_allowed=True, populate_by_name=True)

    x0: np.ndarray
    w0: Optional[np.ndarray] = None
    disturbance: Disturbance = Field(default_factory=Disturbance)
    horizon: float = Field(alias="T", gt=0)
    dt: float = Field(gt=0)

    @field_validator("x0", mode="before")
    @classmethod
    def _coerce_x0(cls, value):
        return np.atleast_2d(np.asarray(value, dtype=float))

    @field_validator("w0", mode="before")
    @classmethod
    def _coerce_w0(cls, value):
        if value is None or (isinstance(value, str) and value == "zeros"):
            return None
        return np.atleast_2d(np.asarray(value, dtype=float))

    @model_validator(mode="after")
    def _check(self) -> "Scenario":
        if self.horizon < self.dt:
            raise InvalidParameter(f"horizon T={self.horizon} is shorter than dt={self.dt}")
        if self.w0 is None:
            self.w0 = np.zeros_like(self.x0)
        if self.w0.shape != self.x0.shape:
            raise DimensionError(f"w0 shape {self.w0.shape} differs from x0 shape {self.x0.shape}")
        if not (np.all(np.isfinite(self.x0)) and np.all(np.isfinite(self.w0))):
            raise InvalidParameter("initial states must be finite")
        return self

    def check_against(self, model: AgentModel, graph: WeightedGraph):
        expected = (graph.node_count, model.n)
        if self.x0.shape != expected:
            raise DimensionError(f"x0 has shape {self.x0.shape}, expected {expected}")
        self.disturbance.check_against(graph.node_count, model.q)


def load_scenario(path: Union[str, Path]) -> Scenario:
    with open(path, 'r') as f:
        data = json.load(f)
    return Scenario.model_validate(data)


class Trajectory(BaseModel):
    """
    采样轨迹，第一维为采样点
        x, w: S×N×n；u: S×N×m；zeta: S×(K·p)；disagreement: S
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    times: np.ndarray
    x: np.ndarray
    w: np.ndarray
    u: np.ndarray
    zeta: np.ndarray
    disagreement: np.ndarray

    @property
    def sample_count(self) -> int:
        return int(self.times.size)

    @classmethod
    def empty(cls, node_count: int, n: int, m: int, zeta_dim: int = 0) -> "Trajectory":
        return cls(
            times=np.zeros(0),
            x=np.zeros((0, node_count, n)),
            w=np.zeros((0, node_count, n)),
            u=np.zeros((0, node_count, m)),
            zeta=np.zeros((0, zeta_dim)),
            disagreement=np.zeros(0),
        )


class NetworkDynamics(ABC):
    """闭环网络右端项基类，状态按 (x, w) 堆叠，每段按智能体顺序排列"""

    def __init__(self, model: AgentModel, graph: WeightedGraph, gains: ProtocolGains,
                 spec: Optional[GraphSpectrum] = None):
        self.model = model
        self.graph = graph
        self.gains = gains.check_against(model)
        self.spec = spec or graphs.spectrum(graph)
        self.node_count = graph.node_count

    def pack(self, x: np.ndarray, w: np.ndarray) -> np.ndarray:
        return np.concatenate([x.ravel(), w.ravel()])

    def unpack(self, state: np.ndarray):
        half = self.node_count * self.model.n
        shape = (self.node_count, self.model.n)
        return state[:half].reshape(shape), state[half:].reshape(shape)

    @abstractmethod
    def rhs(self, state: np.ndarray, d: np.ndarray) -> np.ndarray:
        """返回 d(state)/dt，d 为 N×q 扰动"""
        pass

    def rk4_step(self, state: np.ndarray, t: float, h: float, disturbance: Disturbance) -> np.ndarray:
        N, q = self.node_count, self.model.q
        d0 = disturbance.sample(t, N, q)
        dm = disturbance.sample(t + 0.5 * h, N, q)
        d1 = disturbance.sample(t + h, N, q)
        k1 = self.rhs(state, d0)
        k2 = self.rhs(state + 0.5 * h * k1, dm)
        k3 = self.rhs(state + 0.5 * h * k2, dm)
        k4 = self.rhs(state + h * k3, d1)
        return state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def inputs(self, w: np.ndarray) -> np.ndarray:
        return w @ self.gains.F.T

    def zeta(self, x: np.ndarray, w: np.ndarray) -> np.ndarray:
        """ζ = (W^{1/2}Rᵀ ⊗ I_p) z，z_i = C₂x_i + D₂u_i"""
        z = x @ self.model.C2.T + self.inputs(w) @ self.model.D2.T
        return (self.spec.incidence_factor @ z).ravel()


class ObserverProtocolDynamics(NetworkDynamics):
    """
    逐智能体观测器形式
        ẋ_i = Ax_i + Bu_i + Ed_i
        ẇ_i = Aw_i + B Σ a_ij(u_i − u_j) + G(Σ a_ij(y_i − y_j) − C₁w_i)
        u_i = Fw_i
    """

    def __init__(self, model: AgentModel, graph: WeightedGraph, gains: ProtocolGains,
                 spec: Optional[GraphSpectrum] = None):
        super().__init__(model, graph, gains, spec)
        self.adjacency = graphs.adjacency(graph)
        self.degrees = self.adjacency.sum(axis=1)[:, None]

    def relative(self, signal: np.ndarray) -> np.ndarray:
        """逐行计算 Σ_j a_ij (s_i − s_j)"""
        return self.degrees * signal - self.adjacency @ signal

    def rhs(self, state: np.ndarray, d: np.ndarray) -> np.ndarray:
        m = self.model
        x, w = self.unpack(state)
        u = self.inputs(w)
        y = x @ m.C1.T + d @ m.D1.T
        dx = x @ m.A.T + u @ m.B.T + d @ m.E.T
        innovation = self.relative(y) - w @ m.C1.T
        dw = w @ m.A.T + self.relative(u) @ m.B.T + innovation @ self.gains.G.T
        return self.pack(dx, dw)


class CompactNetworkDynamics(NetworkDynamics):
    """紧凑形式 ż = A_e z + E_e d"""

    def __init__(self, model: AgentModel, graph: WeightedGraph, gains: ProtocolGains,
                 spec: Optional[GraphSpectrum] = None):
        super().__init__(model, graph, gains, spec)
        network = closed_loop_network(model, graph, self.gains, self.spec)
        self.Ae = network.Ae
        self.Ee = network.Ee

    def rhs(self, state: np.ndarray, d: np.ndarray) -> np.ndarray:
        return self.Ae @ state + self.Ee @ d.ravel()


def build_dynamics(model: AgentModel, graph: WeightedGraph, gains: ProtocolGains,
                   form: DynamicsForm = "observer") -> NetworkDynamics:
    if form == "compact":
        return CompactNetworkDynamics(model, graph, gains)
    if form == "observer":
        return ObserverProtocolDynamics(model, graph, gains)
    raise InvalidParameter(f"unknown dynamics form: {form}")


def max_pair_disagreement(x: np.ndarray) -> float:
    """max_{i,j} ‖x_i − x_j‖₂"""
    if x.shape[0] < 2:
        return 0.0
    return float(np.max(pdist(x)))


def simulate(
    model: AgentModel,
    graph: WeightedGraph,
    gains: ProtocolGains,
    scenario: Scenario,
    form: DynamicsForm = "observer",
    settings: Optional[NumericSettings] = None,
    progress: bool = False,
) -> Trajectory:
    """
    固定步长 RK4 仿真
    Raises:
        Diverged: 任一状态分量绝对值超过 divergence_limit
    """
    settings = numerics.resolve(settings)
    scenario.check_against(model, graph)
    dynamics = build_dynamics(model, graph, gains, form)

    steps = max(int(round(scenario.horizon / scenario.dt)), 1)
    h = scenario.horizon / steps
    if scenario.disturbance.type == "pulse" and scenario.disturbance.width < h:
        logger.warning(
            f"Pulse width {scenario.disturbance.width:g} is narrower than dt={h:g}; the pulse may be missed or distorted"
        )
    limit = settings.simulation.divergence_limit

    times = np.linspace(0.0, scenario.horizon, steps + 1)
    N, n = graph.node_count, model.n
    xs = np.empty((steps + 1, N, n))
    ws = np.empty((steps + 1, N, n))
    state = dynamics.pack(scenario.x0, scenario.w0)
    xs[0], ws[0] = dynamics.unpack(state)

    logger.info(f"Simulating {N} agents over T={scenario.horizon:g} with {steps} RK4 steps ({form} form)")
    for k in tqdm(range(steps), desc="simulate", disable=not progress):
        state = dynamics.rk4_step(state, times[k], h, scenario.disturbance)
        peak = float(np.max(np.abs(state))) if state.size else 0.0
        if not np.isfinite(peak) or peak > limit:
            raise Diverged(f"state magnitude {peak:.3e} exceeds {limit:.1e} at t={times[k + 1]:.4g}")
        xs[k + 1], ws[k + 1] = dynamics.unpack(state)

    us = ws @ dynamics.gains.F.T
    zetas = np.stack([dynamics.zeta(xs[k], ws[k]) for k in range(steps + 1)])
    disagreement = np.array([max_pair_disagreement(xs[k]) for k in range(steps + 1)])
    return Trajectory(times=times, x=xs, w=ws, u=us, zeta=zetas, disagreement=disagreement)


class DisagreementProfile(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    times: np.ndarray
    max_pair: np.ndarray
    zeta_norm: np.ndarray

    def tail_below(self, threshold: float, fraction: float = 0.1) -> bool:
        """最后 fraction 比例的采样点均低于 threshold"""
        if self.times.size == 0:
            return True
        start = min(int(np.floor(self.times.size * (1.0 - fraction))), self.times.size - 1)
        return bool(np.all(self.max_pair[start:] < threshold))


def disagreement_profile(traj: Trajectory) -> DisagreementProfile:
    zeta_norm = np.linalg.norm(traj.zeta, axis=1) if traj.zeta.size else np.zeros(traj.sample_count)
    return DisagreementProfile(times=traj.times, max_pair=traj.disagreement, zeta_norm=zeta_norm)


def observer_error(traj: Trajectory, graph: WeightedGraph) -> np.ndarray:
    """每个采样点的 ‖w − (L⊗I)x‖₂"""
    L = graphs.laplacian(graph)
    if traj.sample_count == 0:
        return np.zeros(0)
    if L.shape[0] != traj.x.shape[1]:
        raise DimensionError(f"graph has {L.shape[0]} nodes, trajectory has {traj.x.shape[1]} agents")
    error = traj.w - np.einsum('ij,sjk->sik', L, traj.x)
    return np.linalg.norm(error.reshape(traj.sample_count, -1), axis=1)
