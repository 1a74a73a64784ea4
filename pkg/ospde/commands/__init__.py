"""
Subcommands of the ``ospde`` command line, registered by ``create_cli``.
"""

from .lemmas import cmd_lemmas
from .oracle import cmd_oracle
from .solve import cmd_solve
from .sweep import cmd_sweep
from .verify import cmd_verify

COMMANDS = (cmd_solve, cmd_sweep, cmd_verify, cmd_lemmas, cmd_oracle)

__all__ = ['COMMANDS', 'cmd_solve', 'cmd_sweep', 'cmd_verify', 'cmd_lemmas', 'cmd_oracle']
