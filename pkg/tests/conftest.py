from typing import Optional, Tuple

import numpy as np
import pytest

from app.commands.utils import load_model
from app.config.settings import FIXTURES_DIR, NUM_TOL_ENV
from app.core import graphs, netsim, synthesis
from app.core.numerics import numerics
from app.models.graph_models import WeightedGraph
from app.models.system_models import AgentModel, DesignParams

MODEL_PATH = FIXTURES_DIR / "example_model.json"
GRAPH_PATH = FIXTURES_DIR / "cycle6_graph.json"
SCENARIO_PATH = FIXTURES_DIR / "example_scenario.json"

EXPECTED_P = np.array([[0.9048, -2.2810], [-2.2810, 6.9779]])
EXPECTED_Q = np.array([[0.5, 0.5], [0.5, 0.625]])
EXPECTED_F = np.array([[0.2172, -0.6646]])
EXPECTED_G = np.array([[0.5], [0.5]])
EXPECTED_BOUND = 16.6509
# ε = σ = 1e-3 的实际解，ε → 0 时趋于上面的值
EXPECTED_Q_EPS3 = np.array([[0.50365, 0.50431], [0.50431, 0.63098]])
EXPECTED_G_EPS3 = np.array([[0.50365], [0.50431]])
EXPECTED_BOUND_EPS3 = 16.8469
# EᵀE 形式下实际代价高于上界
EXPECTED_COST_ETE = 24.2329
# EEᵀ 形式下 J ≤ 上界
EXPECTED_BOUND_EET = 36.5898
EXPECTED_COST_EET = 21.6184


@pytest.fixture(autouse=True)
def fresh_numerics(monkeypatch):
    """每个测试使用默认数值参数"""
    monkeypatch.delenv(NUM_TOL_ENV, raising=False)
    numerics.reset()
    yield
    numerics.reset()


@pytest.fixture(scope="session")
def example_model() -> AgentModel:
    return load_model(MODEL_PATH)


@pytest.fixture(scope="session")
def cycle6() -> WeightedGraph:
    return graphs.load_graph(GRAPH_PATH)


@pytest.fixture
def example_scenario() -> netsim.Scenario:
    return netsim.load_scenario(SCENARIO_PATH)


@pytest.fixture(scope="session")
def example_params() -> DesignParams:
    return DesignParams(gamma=17.0, c=None, eps=1e-3, sigma=1e-3, noise_form="EtE")


@pytest.fixture(scope="session")
def example_design(example_model, cycle6, example_params) -> synthesis.DesignResult:
    return synthesis.synthesize(example_model, cycle6, example_params)


@pytest.fixture(scope="session")
def limit_design(example_model, cycle6) -> synthesis.DesignResult:
    return synthesis.synthesize(example_model, cycle6, DesignParams(gamma=17.0, eps=1e-9, sigma=1e-3, noise_form="EtE"))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


def random_model(rng: np.random.Generator, n: int) -> AgentModel:
    """
    满足归一化条件的随机稳定模型
    E = [E₀, 0], D₁ = [0, 1], C₂ = [C₀; 0], D₂ = [0; 1]
    """
    S = rng.standard_normal((n, n))
    A = 0.5 * (S - S.T) - rng.uniform(0.3, 1.0) * np.eye(n)
    B = rng.standard_normal((n, 1))
    E = np.hstack([0.5 * rng.standard_normal((n, n)), np.zeros((n, 1))])
    C1 = rng.standard_normal((1, n))
    D1 = np.zeros((1, n + 1))
    D1[0, -1] = 1.0
    C2 = np.vstack([0.5 * rng.standard_normal((n, n)), np.zeros((1, n))])
    D2 = np.zeros((n + 1, 1))
    D2[-1, 0] = 1.0
    return AgentModel(A=A, B=B, C1=C1, D1=D1, C2=C2, D2=D2, E=E)


def slowest_decay(model: AgentModel, graph: WeightedGraph, result: synthesis.DesignResult) -> float:
    """非一致模态闭环的最大特征值实部"""
    from app.core import h2cert

    spec = graphs.spectrum(graph)
    worst = -np.inf
    for lam in spec.modes:
        block = h2cert.modal_blocks(model, lam, result.gains)
        worst = max(worst, float(np.max(np.linalg.eigvals(block.Abar).real)))
    return worst


def random_feasible_design(
    rng: np.random.Generator,
    max_attempts: int = 20,
) -> Optional[Tuple[AgentModel, WeightedGraph, synthesis.DesignResult]]:
    """随机生成衰减足够快的可行设计，供求积交叉校验使用"""
    for _ in range(max_attempts):
        n = int(rng.choice([2, 3]))
        N = int(rng.choice([3, 4, 5]))
        model = random_model(rng, n)
        graph = graphs.random_connected_graph(N, rng)
        params = DesignParams(gamma=1e12, eps=1e-3, sigma=1e-3, noise_form="EEt")
        result = synthesis.synthesize(model, graph, params)
        if slowest_decay(model, graph, result) < -0.15:
            return model, graph, result
    return None
