import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from app.commands.utils import fmt, fmt_matrix, load_model  # noqa: E402
from app.config.settings import FIXTURES_DIR  # noqa: E402
from app.core import graphs, h2cert, netsim, synthesis  # noqa: E402
from app.models.system_models import DesignParams  # noqa: E402
from app.utils.export import emit_gnuplot, export_csv  # noqa: E402


def reproduce_example(gamma: float = 17.0):
    """六智能体环形网络示例：设计、代价、仿真与绘图脚本"""
    output_dir = Path(__file__).resolve().parent.parent / "output"
    output_dir.mkdir(exist_ok=True)

    try:
        model = load_model(FIXTURES_DIR / "example_model.json")
        graph = graphs.load_graph(FIXTURES_DIR / "cycle6_graph.json")
        scenario = netsim.load_scenario(FIXTURES_DIR / "example_scenario.json")

        # 示例取 EᵀE 形式的观测 Riccati 方程
        params = DesignParams(gamma=gamma, eps=1e-3, sigma=1e-3, noise_form="EtE")
        result = synthesis.synthesize(model, graph, params)
        certificate = result.certificate
        print(f"c = {fmt(certificate.params.c)}")
        print("P =\n" + fmt_matrix(certificate.P))
        print("Q =\n" + fmt_matrix(certificate.Q))
        print("F =\n" + fmt_matrix(result.gains.F))
        print("G =\n" + fmt_matrix(result.gains.G))
        print(f"bound = {fmt(certificate.bound_total)} < gamma = {fmt(gamma)}")

        # ε → 0 的极限 Q 与上界
        limit = synthesis.synthesize(model, graph, params.model_copy(update={"eps": 1e-9}))
        print("Q (eps = 1e-9) =\n" + fmt_matrix(limit.certificate.Q))
        print(f"bound (eps = 1e-9) = {fmt(limit.certificate.bound_total)}")

        cost = h2cert.network_cost(model, graph, result.gains)
        print(f"J = {fmt(cost.total)} (EtE form, may exceed the bound)")

        # EEᵀ 形式下 J ≤ 上界 有保证
        guaranteed = synthesis.synthesize(model, graph, DesignParams(gamma=1e6, noise_form="EEt"))
        guaranteed_cost = h2cert.network_cost(model, graph, guaranteed.gains).total
        print(f"EEt design: J = {fmt(guaranteed_cost)} <= bound = {fmt(guaranteed.certificate.bound_total)}")

        traj = netsim.simulate(model, graph, result.gains, scenario, progress=True)
        csv_path = export_csv(traj, output_dir / "example_trajectory.csv")
        gp_path = emit_gnuplot(traj, output_dir / "example_trajectory.gp", csv_path=csv_path)
        print(f"final disagreement = {fmt(traj.disagreement[-1])}")
        print(f"final |w| = {fmt(float(np.linalg.norm(traj.w[-1])))}")

        design_path = output_dir / "example_design.json"
        with open(design_path, "w", encoding="utf-8") as f:
            json.dump(result.to_json_dict(), f, ensure_ascii=False, indent=2)

        print(f"设计结果已生成: {design_path}")
        print(f"轨迹已生成: {csv_path}，绘图脚本: {gp_path}")

    except Exception as e:
        print(f"复现示例时出错: {str(e)}")
        raise


if __name__ == "__main__":
    reproduce_example()
