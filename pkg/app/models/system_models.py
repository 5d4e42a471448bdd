from typing import Dict, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

from app.core import matkit
from app.core.errors import DimensionError

NoiseForm = Literal["EEt", "EtE"]
CaseSelect = Literal["case_i", "case_ii", "auto"]


class AgentModel(BaseModel):
    """
    单个智能体模型
        ẋ = A x + B u + E d
        y = C₁ x + D₁ d
        z = C₂ x + D₂ u
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    A: np.ndarray
    B: np.ndarray
    C1: np.ndarray
    D1: np.ndarray
    C2: np.ndarray
    D2: np.ndarray
    E: np.ndarray

    @field_validator("A", "B", "C1", "D1", "C2", "D2", "E", mode="before")
    @classmethod
    def _coerce(cls, value):
        return matkit.as_matrix(value)

    @model_validator(mode="after")
    def _check_dimensions(self) -> "AgentModel":
        n = self.A.shape[0]
        expected = {
            "A": (n, n),
            "B": (n, self.m),
            "C1": (self.r, n),
            "D1": (self.r, self.q),
            "C2": (self.p, n),
            "D2": (self.p, self.m),
            "E": (n, self.q),
        }
        for name, shape in expected.items():
            actual = getattr(self, name).shape
            if actual != shape:
                raise DimensionError(f"{name} has shape {actual}, expected {shape}")
        return self

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def q(self) -> int:
        return self.E.shape[1]

    @property
    def r(self) -> int:
        return self.C1.shape[0]

    @property
    def p(self) -> int:
        return self.C2.shape[0]

    @field_serializer("A", "B", "C1", "D1", "C2", "D2", "E")
    def _serialize(self, value: np.ndarray):
        return value.tolist()


class ProtocolGains(BaseModel):
    """协议局部增益 F (m×n) 与 G (n×r)"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    F: np.ndarray
    G: np.ndarray

    @field_validator("F", "G", mode="before")
    @classmethod
    def _coerce(cls, value):
        return matkit.as_matrix(value)

    def check_against(self, model: AgentModel) -> "ProtocolGains":
        if self.F.shape != (model.m, model.n):
            raise DimensionError(f"F has shape {self.F.shape}, expected {(model.m, model.n)}")
        # 单输出时允许 G 写成行向量
        G = self.G.T if self.G.shape == (1, model.n) and model.r == 1 and model.n != 1 else self.G
        if G.shape != (model.n, model.r):
            raise DimensionError(f"G has shape {self.G.shape}, expected {(model.n, model.r)}")
        self.G = G
        return self

    @field_serializer("F", "G")
    def _serialize(self, value: np.ndarray):
        return value.tolist()


class DesignParams(BaseModel):
    """设计参数 γ, c, 情形, ε, σ, 噪声形式"""
    gamma: float = Field(..., gt=0, description="代价容限 γ")
    c: Optional[float] = Field(None, gt=0, description="耦合增益 c，None 表示 auto")
    case_select: CaseSelect = Field("auto", description="c 所在的容许区间：case_i, case_ii 或 auto")
    eps: float = Field(1e-3, gt=0, description="观测 Riccati 扰动 ε")
    sigma: float = Field(1e-3, gt=0, description="状态 Riccati 扰动 σ")
    noise_form: NoiseForm = Field("EEt", description="观测噪声项 EEᵀ 或 EᵀE")


class NormalizationReport(BaseModel):
    """四个归一化条件及最大偏差"""
    d1_et_zero: bool
    d2t_c2_zero: bool
    d1_d1t_identity: bool
    d2t_d2_identity: bool
    deviations: Dict[str, float]

    @property
    def all_ok(self) -> bool:
        return self.d1_et_zero and self.d2t_c2_zero and self.d1_d1t_identity and self.d2t_d2_identity

    def failed(self) -> list:
        names = {
            "d1_et_zero": "D1 E^T = 0",
            "d2t_c2_zero": "D2^T C2 = 0",
            "d1_d1t_identity": "D1 D1^T = I",
            "d2t_d2_identity": "D2^T D2 = I",
        }
        return [label for key, label in names.items() if not getattr(self, key)]
