#!/usr/bin/env python3
"""slantnewton CLI - semismooth Newton-GMRES for elliptic control."""

import contextlib
import sys

from pydantic import ValidationError
from pydantic_settings import (
    CliApp,
    CliSubCommand,
    SettingsError,
    get_subcommand,
)

from slantnewton.command.run import EXIT_ERROR, RunCommand
from slantnewton.command.sweep import SweepCommand
from slantnewton.core.config import Settings
from slantnewton.core.log import logger

USAGE = (
    "usage: slantnewton run (--example NAME | --file PATH) [options]\n"
    "       slantnewton sweep --example NAME --grids [32,64] [options]\n"
    "       slantnewton --help"
)


class CliState(Settings):
    """Inexact semismooth Newton-GMRES with nonmonotone line search
    for box-constrained semilinear elliptic optimal control.

    Configuration sources (in priority order):
    1. Command-line arguments (--config.solver.c1 0.3)
    2. Environment variables (SLANTNEWTON_CONFIG__SOLVER__C1=0.3)
    3. .env file
    4. --include files, then ./slantnewton.yaml
    5. User config (~/.config/slantnewton/slantnewton.yaml)

    The [JSON] options set several values at once:
      --config.solver '{"c1": 0.3, "window": 5}'
    """

    run: CliSubCommand[RunCommand]
    sweep: CliSubCommand[SweepCommand]

    def cli_cmd(self):
        """Dispatch to the active subcommand, or show help."""
        subcommand = get_subcommand(self, is_required=False)

        if subcommand is None:
            # argparse exits 0 after printing help.
            with contextlib.suppress(SystemExit):
                CliApp.run(CliState, cli_args=["--help"])
            sys.exit(EXIT_ERROR)

        # Closes file sinks on the way out.
        with logger:
            raise SystemExit(subcommand.execute(self))


def main():
    """Main entry point for CLI."""
    try:
        CliApp.run(CliState)
    except (SettingsError, ValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        print(USAGE, file=sys.stderr)
        sys.exit(EXIT_ERROR)


if __name__ == "__main__":
    main()
