from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.errors import GraphValidationError


class WeightedGraph(BaseModel):
    """简单无向正权图，边以无序对列出一次"""
    model_config = ConfigDict(populate_by_name=True)

    node_count: int = Field(..., ge=1, alias="nodes", description="节点数 N")
    edges: List[Tuple[int, int, float]] = Field(default_factory=list, description="边 (i, j, w)，0 起始编号")

    @model_validator(mode="after")
    def _check_invariants(self) -> "WeightedGraph":
        seen = set()
        for i, j, w in self.edges:
            if not (0 <= i < self.node_count and 0 <= j < self.node_count):
                raise GraphValidationError(f"edge ({i}, {j}) references a node outside 0..{self.node_count - 1}")
            if i == j:
                raise GraphValidationError(f"self-loop at node {i}")
            if not (w > 0 and np.isfinite(w)):
                raise GraphValidationError(f"edge ({i}, {j}) has non-positive weight {w}")
            pair = (min(i, j), max(i, j))
            if pair in seen:
                raise GraphValidationError(f"duplicate edge {pair}")
            seen.add(pair)
        return self

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def to_json_dict(self) -> dict:
        return {"nodes": self.node_count, "edges": [[i, j, w] for i, j, w in self.edges]}


class GraphSpectrum(BaseModel):
    """拉普拉斯分解 L = RWRᵀ 与 UᵀLU = diag(λ)"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    L: np.ndarray
    R: np.ndarray
    W: np.ndarray
    U: np.ndarray
    eigenvalues: np.ndarray

    @property
    def node_count(self) -> int:
        return self.L.shape[0]

    @property
    def lambda2(self) -> float:
        return float(self.eigenvalues[1]) if self.node_count > 1 else 0.0

    @property
    def lambdaN(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def modes(self) -> List[float]:
        """非零模态 λ₂..λ_N（重特征值分别列出）"""
        return [float(v) for v in self.eigenvalues[1:]]

    @property
    def incidence_factor(self) -> np.ndarray:
        """W^{1/2}Rᵀ，K×N"""
        return np.sqrt(self.W) @ self.R.T
