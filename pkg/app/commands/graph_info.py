import click

from app.commands.utils import fmt
from app.core import graphs, synthesis
from app.middleware.error_handler import handle_errors


@click.command(name="graph-info")
@click.option("--graph", "graph_path", required=True)
@handle_errors
def graph_info(graph_path):
    """图的规模、连通性、拉普拉斯谱与 c 的容许区间"""
    graph = graphs.load_graph(graph_path)
    spec = graphs.spectrum(graph)
    connected = graphs.is_connected(graph)

    click.echo(f"N = {graph.node_count}")
    click.echo(f"K = {graph.edge_count}")
    click.echo(f"connected = {str(connected).lower()}")
    if not connected:
        click.echo(f"components = {graphs.component_count(graph)}")
    click.echo("eigenvalues = " + ", ".join(fmt(v) for v in spec.eigenvalues))
    click.echo(f"lambda2 = {fmt(spec.lambda2)}")
    click.echo(f"lambdaN = {fmt(spec.lambdaN)}")
    if connected and graph.node_count >= 2:
        for case in ("case_i", "case_ii"):
            interval = synthesis.admissible_c_range(spec.lambda2, spec.lambdaN, case)
            click.echo(f"{case} c range = {interval.describe()}")
