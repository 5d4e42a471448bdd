import click

from app.commands.utils import fmt, load_gains, load_model
from app.core import graphs, h2cert
from app.core.errors import NotSuboptimal, NotSynchronizing
from app.middleware.error_handler import handle_errors


@click.command(name="verify")
@click.option("--model", "model_path", required=True)
@click.option("--graph", "graph_path", required=True)
@click.option("--gains", "gains_path", required=True)
@click.option("--gamma", type=float, default=None, help="给定时同时判定 J < γ")
@handle_errors
def verify(model_path, graph_path, gains_path, gamma):
    """检查协议是否使网络同步，可选判定次优性"""
    model = load_model(model_path)
    graph = graphs.load_graph(graph_path)
    gains = load_gains(gains_path)

    report = h2cert.verify_synchronizing(model, graph, gains)
    for index, mode in enumerate(report.modes, start=2):
        verdict = "Hurwitz" if mode.state_feedback_hurwitz else "NOT Hurwitz"
        click.echo(f"mode {index}: lambda = {fmt(mode.lambda_i)}, A + lambda BF {verdict}")
    click.echo(f"observer A - GC1 {'Hurwitz' if report.observer_hurwitz else 'NOT Hurwitz'}")
    click.echo(f"synchronizing = {str(report.synchronizing).lower()}")
    if not report.synchronizing:
        raise NotSynchronizing("protocol does not synchronize the network", detail=report)

    if gamma is not None:
        cost = h2cert.network_cost(model, graph, gains, gamma=gamma)
        click.echo(f"J = {fmt(cost.total)}, gamma = {fmt(gamma)}")
        click.echo(f"suboptimal = {str(cost.suboptimal).lower()}")
        if not cost.suboptimal:
            raise NotSuboptimal(cost.total, gamma)
