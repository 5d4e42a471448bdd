import click

from app.commands.utils import fmt, load_gains, load_model
from app.core import graphs, h2cert
from app.middleware.error_handler import handle_errors


@click.command(name="cost")
@click.option("--model", "model_path", required=True)
@click.option("--graph", "graph_path", required=True)
@click.option("--gains", "gains_path", required=True)
@click.option("--quadrature", type=(float, float), default=None, metavar="T DT",
              help="用 Simpson 积分交叉校验，T 为时长，DT 为步长")
@handle_errors
def cost(model_path, graph_path, gains_path, quadrature):
    """计算 H2 代价 J(F,G) 及逐模态分量"""
    model = load_model(model_path)
    graph = graphs.load_graph(graph_path)
    gains = load_gains(gains_path)

    report = h2cert.network_cost(model, graph, gains)
    for index, (lam, value) in enumerate(report.per_mode, start=2):
        click.echo(f"J_{index} (lambda = {fmt(lam)}) = {fmt(value)}")
    click.echo(f"J = {fmt(report.total)}")

    if quadrature is not None:
        horizon, dt = quadrature
        estimate = h2cert.impulse_cost_quadrature(model, graph, gains, horizon, dt)
        gap = abs(estimate - report.total) / max(abs(report.total), 1e-300)
        click.echo(f"quadrature = {fmt(estimate)} (T = {fmt(horizon)}, dt = {fmt(dt)})")
        click.echo(f"relative gap = {gap:.3e}")
