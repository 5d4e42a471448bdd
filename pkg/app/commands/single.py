import click

from app.commands.utils import fmt, fmt_matrix, load_model, write_json
from app.config.settings import DEFAULT_EPS, DEFAULT_NOISE_FORM, DEFAULT_SIGMA
from app.core import h2cert
from app.middleware.error_handler import handle_errors


@click.command(name="single")
@click.option("--model", "model_path", required=True)
@click.option("--gamma", type=float, required=True)
@click.option("--eps", type=float, default=DEFAULT_EPS, show_default=True)
@click.option("--sigma", type=float, default=DEFAULT_SIGMA, show_default=True)
@click.option("--noise-form", type=click.Choice(["EEt", "EtE"]), default=DEFAULT_NOISE_FORM, show_default=True)
@click.option("--out", "out_path", default=None)
@handle_errors
def single(model_path, gamma, eps, sigma, noise_form, out_path):
    """单个系统的观测器型次优 H2 控制器"""
    model = load_model(model_path)
    result = h2cert.single_loop_design(model, gamma, eps=eps, sigma=sigma, noise_form=noise_form)
    click.echo("F =")
    click.echo(fmt_matrix(result.gains.F))
    click.echo("G =")
    click.echo(fmt_matrix(result.gains.G))
    click.echo(f"bound = {fmt(result.bound)}")
    click.echo(f"J = {fmt(result.cost)}")
    if out_path:
        data = result.gains.model_dump()
        data.update({"bound": result.bound, "cost": result.cost, "gamma": result.gamma})
        write_json(out_path, data)
