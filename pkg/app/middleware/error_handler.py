import functools
import logging

import click
from pydantic import ValidationError

from app.config.settings import ERROR_MESSAGES, EXIT_CODES
from app.core.errors import AllInfeasible, InfeasibleDesign, InvalidInputError, NotSuboptimal, NumericalError

logger = logging.getLogger(__name__)


def _fail(key: str, message_key: str, error: Exception) -> int:
    click.echo(f"Error: {ERROR_MESSAGES[message_key]}: {error}", err=True)
    return EXIT_CODES[key]


def handle_errors(func):
    """将领域异常映射为命令行退出码"""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (click.exceptions.Exit, click.ClickException, click.Abort):
            raise
        except InfeasibleDesign as e:
            logger.info(f"Infeasible design: bound {e.bound:.6g}, gamma {e.gamma:.6g}")
            click.echo(f"bound = {e.bound:.6g}")
            code = _fail('INFEASIBLE', 'INFEASIBLE', e)
        except NotSuboptimal as e:
            logger.info(f"Protocol not suboptimal: J {e.cost:.6g}, gamma {e.gamma:.6g}")
            code = _fail('INFEASIBLE', 'NOT_SUBOPTIMAL', e)
        except AllInfeasible as e:
            logger.info(f"Sweep found no feasible point (smallest bound {e.best_bound})")
            if e.best_bound is not None:
                click.echo(f"bound = {e.best_bound:.6g}")
            code = _fail('INFEASIBLE', 'INFEASIBLE', e)
        except (ValidationError, InvalidInputError) as e:
            logger.error(f"Validation error: {str(e)}")
            code = _fail('INVALID_INPUT', 'INVALID_INPUT', e)
        except NumericalError as e:
            logger.error(f"Numerical failure: {str(e)}")
            code = _fail('NUMERICAL', 'NUMERICAL_FAILURE', e)
        except OSError as e:
            logger.error(f"File operation failed: {str(e)}")
            code = _fail('IO', 'IO_FAILED', e)
        except ValueError as e:
            # 例如 JSON 解析失败
            logger.error(f"Validation error: {str(e)}")
            code = _fail('INVALID_INPUT', 'INVALID_INPUT', e)
        except Exception as e:
            logger.exception(f"Unexpected error: {str(e)}")
            code = _fail('INTERNAL', 'INTERNAL', e)
        click.get_current_context().exit(code)
    return wrapper
