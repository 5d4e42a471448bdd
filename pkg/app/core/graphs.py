"""
通信图：拉普拉斯矩阵、关联矩阵分解、谱与连通性
"""
import json
import logging
from pathlib import Path
from typing import Optional, Tuple, Union

import networkx as nx
import numpy as np

from app.core import matkit
from app.core.errors import GraphValidationError
from app.core.numerics import NumericSettings, numerics
from app.models.graph_models import GraphSpectrum, WeightedGraph

logger = logging.getLogger(__name__)


def load_graph(path: Union[str, Path]) -> WeightedGraph:
    """从 JSON 文件加载图 {"nodes": N, "edges": [[i, j, w], ...]}"""
    with open(path, 'r') as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise GraphValidationError(f"graph file {path} must contain a JSON object")
    return WeightedGraph.model_validate(data)


def adjacency(g: WeightedGraph) -> np.ndarray:
    """对称邻接矩阵 𝒜 = [a_ij]"""
    A = np.zeros((g.node_count, g.node_count))
    for i, j, w in g.edges:
        A[i, j] = w
        A[j, i] = w
    return A


def laplacian(g: WeightedGraph) -> np.ndarray:
    """L = 𝒟 − 𝒜"""
    A = adjacency(g)
    return np.diag(A.sum(axis=1)) - A


def incidence(g: WeightedGraph) -> Tuple[np.ndarray, np.ndarray]:
    """
    关联矩阵与权重矩阵
    Returns:
        (R, W)：R 为 N×K，每列在较小编号节点处取 +1，较大编号处取 −1；W 为 K×K 对角阵
    """
    R = np.zeros((g.node_count, g.edge_count))
    weights = np.zeros(g.edge_count)
    for k, (i, j, w) in enumerate(g.edges):
        lo, hi = min(i, j), max(i, j)
        R[lo, k] = 1.0
        R[hi, k] = -1.0
        weights[k] = w
    return R, np.diag(weights)


def spectrum(g: WeightedGraph, settings: Optional[NumericSettings] = None) -> GraphSpectrum:
    """计算 GraphSpectrum，λ₁ 置为精确 0，接近 0 的特征值钳位为非负"""
    settings = numerics.resolve(settings)
    L = laplacian(g)
    R, W = incidence(g)
    eigvals, U = matkit.sym_eig(L, settings)
    eigvals = eigvals.copy()
    eigvals[np.abs(eigvals) <= settings.graphs.zero_clamp] = 0.0
    eigvals = np.maximum(eigvals, 0.0)
    eigvals[0] = 0.0
    return GraphSpectrum(L=L, R=R, W=W, U=U, eigenvalues=eigvals)


def to_networkx(g: WeightedGraph) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(range(g.node_count))
    G.add_weighted_edges_from(g.edges)
    return G


def is_connected(g: WeightedGraph) -> bool:
    """广度优先搜索判定连通性"""
    return nx.is_connected(to_networkx(g))


def component_count(g: WeightedGraph) -> int:
    return nx.number_connected_components(to_networkx(g))


def path_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    return WeightedGraph(node_count=n, edges=[(i, i + 1, weight) for i in range(n - 1)])


def cycle_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    if n < 3:
        return path_graph(n, weight)
    return WeightedGraph(node_count=n, edges=[(i, (i + 1) % n, weight) for i in range(n)])


def complete_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    return WeightedGraph(node_count=n, edges=[(i, j, weight) for i in range(n) for j in range(i + 1, n)])


def random_connected_graph(
    n: int,
    rng: np.random.Generator,
    extra_edge_prob: float = 0.3,
    weight_range: Tuple[float, float] = (0.5, 2.0),
) -> WeightedGraph:
    """随机生成树加随机边，保证连通"""
    edges = {}
    order = rng.permutation(n)
    for k in range(1, n):
        parent = int(order[rng.integers(0, k)])
        child = int(order[k])
        edges[(min(parent, child), max(parent, child))] = float(rng.uniform(*weight_range))
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) not in edges and rng.random() < extra_edge_prob:
                edges[(i, j)] = float(rng.uniform(*weight_range))
    return WeightedGraph(node_count=n, edges=[(i, j, w) for (i, j), w in sorted(edges.items())])
