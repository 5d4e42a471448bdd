import logging

import click
import numpy as np

from app.commands.utils import fmt, load_gains, load_model, show_progress
from app.core import graphs, netsim
from app.middleware.error_handler import handle_errors
from app.utils.export import emit_gnuplot, export_csv

logger = logging.getLogger(__name__)


@click.command(name="simulate")
@click.option("--model", "model_path", required=True)
@click.option("--graph", "graph_path", required=True)
@click.option("--gains", "gains_path", required=True)
@click.option("--scenario", "scenario_path", required=True, help="仿真场景 JSON")
@click.option("--out", "out_path", required=True, help="轨迹 CSV")
@click.option("--gnuplot", "gnuplot_path", default=None, help="gnuplot 脚本输出路径")
@click.option("--form", type=click.Choice(["observer", "compact"]), default="observer", show_default=True)
@handle_errors
def simulate(model_path, graph_path, gains_path, scenario_path, out_path, gnuplot_path, form):
    """RK4 仿真受控网络并导出轨迹"""
    model = load_model(model_path)
    graph = graphs.load_graph(graph_path)
    gains = load_gains(gains_path)
    scenario = netsim.load_scenario(scenario_path)

    traj = netsim.simulate(model, graph, gains, scenario, form=form, progress=show_progress())
    export_csv(traj, out_path)
    if gnuplot_path:
        emit_gnuplot(traj, gnuplot_path, csv_path=out_path)

    profile = netsim.disagreement_profile(traj)
    error = netsim.observer_error(traj, graph)
    click.echo(f"samples = {traj.sample_count}")
    click.echo(f"final disagreement = {fmt(profile.max_pair[-1])}")
    click.echo(f"final |zeta| = {fmt(profile.zeta_norm[-1])}")
    click.echo(f"final |w| = {fmt(float(np.linalg.norm(traj.w[-1])))}")
    click.echo(f"final observer error = {fmt(error[-1])}")
