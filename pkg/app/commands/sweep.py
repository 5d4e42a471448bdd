import json
import logging

import click

from app.commands.utils import CASE_CHOICES, load_model, parse_case, parse_grid, show_progress, write_json
from app.config.settings import DEFAULT_NOISE_FORM
from app.core import graphs, synthesis
from app.middleware.error_handler import handle_errors

logger = logging.getLogger(__name__)


@click.command(name="sweep")
@click.option("--model", "model_path", required=True)
@click.option("--graph", "graph_path", required=True)
@click.option("--gamma", type=float, required=True)
@click.option("--c-grid", default="auto", show_default=True, help="逗号分隔，例如 auto,0.1")
@click.option("--eps-grid", default="1e-3", show_default=True)
@click.option("--sigma-grid", default="1e-3", show_default=True)
@click.option("--case", "case_text", type=click.Choice(list(CASE_CHOICES)), default="auto", show_default=True)
@click.option("--noise-form", type=click.Choice(["EEt", "EtE"]), default=DEFAULT_NOISE_FORM, show_default=True)
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--out", "out_path", default=None, help="最优增益与证书输出 JSON")
@handle_errors
def sweep(model_path, graph_path, gamma, c_grid, eps_grid, sigma_grid, case_text, noise_form, workers, out_path):
    """在 (c, ε, σ) 网格上搜索上界最小的可行设计"""
    model = load_model(model_path)
    graph = graphs.load_graph(graph_path)
    outcome = synthesis.sweep(
        model,
        graph,
        gamma,
        c_grid=parse_grid(c_grid, "c", allow_auto=True),
        eps_grid=parse_grid(eps_grid, "eps"),
        sigma_grid=parse_grid(sigma_grid, "sigma"),
        case_select=parse_case(case_text),
        noise_form=noise_form,
        workers=workers,
        progress=show_progress(),
    )
    data = outcome.best.to_json_dict()
    click.echo(json.dumps(data, indent=2))
    logger.info(f"{outcome.feasible}/{outcome.evaluated} grid points feasible")
    if out_path:
        write_json(out_path, data)
