import logging
import logging.config

import click

from app.commands import commands
from app.config.settings import APP_DESCRIPTION, APP_NAME, APP_VERSION, LOG_CONFIG

# 配置日志
logging.config.dictConfig(LOG_CONFIG)
logger = logging.getLogger(__name__)


@click.group(name=APP_NAME, help=APP_DESCRIPTION)
@click.version_option(APP_VERSION, prog_name=APP_NAME)
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
              default=None, help="覆盖 H2NET_LOG_LEVEL")
@click.option("--quiet", is_flag=True, default=False, help="只输出错误日志")
@click.pass_context
def cli(ctx, log_level, quiet):
    ctx.ensure_object(dict)["quiet"] = quiet
    root = logging.getLogger()
    if quiet:
        root.setLevel(logging.ERROR)
    elif log_level:
        root.setLevel(log_level.upper())


# 注册子命令
for command in commands:
    cli.add_command(command)


if __name__ == "__main__":
    cli()
