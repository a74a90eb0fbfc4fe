"""Sweep command - tabulate solves over grids, c1 and variants."""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, Literal

from pydantic import Field

from slantnewton.command.options import ProblemOptions
from slantnewton.command.run import (
    EXIT_CONVERGED,
    EXIT_ERROR,
    EXIT_SOLVER_FAILED,
)
from slantnewton.core.config import Variant
from slantnewton.core.log import logger
from slantnewton.report.writer import write_rows
from slantnewton.runner.sweep import SWEEP_COLUMNS, SweepRunner

if TYPE_CHECKING:
    from slantnewton.core.config import Settings


class SweepCommand(ProblemOptions):
    """Solve a built-in example for every (n, c1, variant) combination.

    Writes one CSV row per case, sorted by n, c1 and variant. Failed
    cases are kept as rows carrying their failure_reason. Parallelism
    is capped by the ISSNG_THREADS environment variable.
    """

    example: Literal["example1", "example2"] = Field(
        default="example1", description="Built-in benchmark problem"
    )
    grids: list[int] = Field(
        default_factory=lambda: [32, 64, 128],
        description="Grid sizes n",
    )
    c1: list[float] = Field(
        default_factory=lambda: [0.5],
        description="Sufficient-decrease coefficients",
    )
    variants: list[Variant] = Field(
        default_factory=lambda: ["issng-l"],
        alias="variant",
        description="Solver variants",
    )
    output: Path = Field(
        default=Path("sweep.csv"), description="Aggregate CSV"
    )

    def execute(self, settings: Settings) -> int:
        """Run the sweep and write the table.

        Returns:
            0 when every case converged, 2 when some failed, 1 on bad
            arguments or an unwritable table
        """
        if self.file is not None:
            logger.error("sweep works on --example problems only")
            return EXIT_ERROR

        def factory(n: int):
            case = self.build_case(n)
            return case.instance, self.initial_state(case)

        runner = SweepRunner(factory, self.solver_config(settings))
        try:
            rows = runner.run(self.grids, self.c1, self.variants)
        except ValueError as e:
            logger.error("Invalid sweep: {error}", error=str(e))
            return EXIT_ERROR

        try:
            write_rows(self.output, SWEEP_COLUMNS, rows)
        except OSError as e:
            logger.error("Cannot write output: {error}", error=str(e))
            return EXIT_ERROR
        logger.info(
            "Wrote {count} rows to {path}",
            count=len(rows),
            path=str(self.output),
        )

        if any(row.failure_reason for row in rows):
            return EXIT_SOLVER_FAILED
        return EXIT_CONVERGED
