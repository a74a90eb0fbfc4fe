"""CLI command modules for slantnewton."""

from slantnewton.command.run import RunCommand
from slantnewton.command.sweep import SweepCommand

__all__ = ["RunCommand", "SweepCommand"]
