"""
ospde - penalization solver and verification harness for obstacle problems
of quasilinear stochastic PDEs.

Command line application factory.
"""

import click
from dotenv import load_dotenv

__version__ = '1.0.0'


def create_cli(config_name=None) -> click.Group:
    """
    Application factory for the ``ospde`` command line.

    Args:
        config_name: Settings profile name or dotted class path
            (defaults to $OSPDE_ENV, then 'development')

    Returns:
        click.Group with every subcommand registered
    """
    load_dotenv()

    from .config import load_settings
    from .utils.logger import setup_logger

    settings = load_settings(config_name)
    logger = setup_logger('ospde', settings.LOG_LEVEL, settings.LOG_FILE)
    logger.debug(f'Settings profile {settings.__name__}')

    @click.group()
    @click.version_option(__version__, prog_name='ospde')
    @click.pass_context
    def cli(ctx):
        """Penalized obstacle SPDE solver and verification suite."""
        ctx.obj = settings

    # Register subcommands
    from .commands import COMMANDS

    for command in COMMANDS:
        cli.add_command(command)

    return cli
