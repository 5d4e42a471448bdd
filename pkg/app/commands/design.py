import logging

import click

from app.commands.utils import CASE_CHOICES, fmt, fmt_matrix, load_model, parse_c, parse_case, write_json
from app.config.settings import DEFAULT_EPS, DEFAULT_NOISE_FORM, DEFAULT_SIGMA
from app.core import graphs, synthesis
from app.middleware.error_handler import handle_errors
from app.models.system_models import DesignParams

logger = logging.getLogger(__name__)


@click.command(name="design")
@click.option("--model", "model_path", required=True, help="智能体模型 JSON")
@click.option("--graph", "graph_path", required=True, help="通信图 JSON")
@click.option("--gamma", type=float, required=True, help="代价容限 γ")
@click.option("--c", "c_text", default="auto", show_default=True, help="耦合增益 c，或 auto")
@click.option("--case", "case_text", type=click.Choice(list(CASE_CHOICES)), default="auto", show_default=True)
@click.option("--eps", type=float, default=DEFAULT_EPS, show_default=True)
@click.option("--sigma", type=float, default=DEFAULT_SIGMA, show_default=True)
@click.option("--noise-form", type=click.Choice(["EEt", "EtE"]), default=DEFAULT_NOISE_FORM, show_default=True)
@click.option("--out", "out_path", default=None, help="增益与证书输出 JSON")
@handle_errors
def design(model_path, graph_path, gamma, c_text, case_text, eps, sigma, noise_form, out_path):
    """计算分布式次优 H2 协议增益 F, G"""
    model = load_model(model_path)
    graph = graphs.load_graph(graph_path)
    params = DesignParams(
        gamma=gamma,
        c=parse_c(c_text),
        case_select=parse_case(case_text),
        eps=eps,
        sigma=sigma,
        noise_form=noise_form,
    )
    result = synthesis.synthesize(model, graph, params)
    certificate = result.certificate

    click.echo(f"c = {fmt(certificate.params.c)} ({certificate.params.case_select})")
    click.echo(f"lambda2 = {fmt(certificate.lambda2)}, lambdaN = {fmt(certificate.lambdaN)}")
    click.echo("P =")
    click.echo(fmt_matrix(certificate.P))
    click.echo("Q =")
    click.echo(fmt_matrix(certificate.Q))
    click.echo("F =")
    click.echo(fmt_matrix(result.gains.F))
    click.echo("G =")
    click.echo(fmt_matrix(result.gains.G))
    click.echo(f"bound = {fmt(certificate.bound_total)}")
    click.echo(f"margin = {fmt(certificate.margin)}")

    if out_path:
        write_json(out_path, result.to_json_dict())
