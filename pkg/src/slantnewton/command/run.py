"""Run command - one configured solve with CSV/JSON output."""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING

from pydantic import Field, ValidationError, model_validator

from slantnewton.command.options import ProblemOptions
from slantnewton.core.config import Variant
from slantnewton.core.log import logger
from slantnewton.model.examples import control_error
from slantnewton.report.writer import (
    ProblemSummary,
    RunReport,
    write_records_csv,
    write_report_json,
)
from slantnewton.solver.newton import solve

if TYPE_CHECKING:
    from slantnewton.core.config import Settings

EXIT_CONVERGED = 0
EXIT_ERROR = 1
EXIT_SOLVER_FAILED = 2


class RunCommand(ProblemOptions):
    """Solve one problem with ISSNG-L (or plain ISSNG).

    Exactly one of --example and --file selects the problem. Solver
    parameters come from slantnewton.yaml, the environment, or
    --config.solver.<field>.

    Exit codes: 0 converged, 2 solver failure (reports still written),
    1 bad arguments or unwritable output.
    """

    n: int = Field(default=32, ge=2, description="Grid subintervals")
    variant: Variant | None = Field(
        default=None,
        description="Override config.solver.variant",
    )
    csv_path: Path | None = Field(
        default=None,
        alias="csv",
        description="Write per-iteration records here",
    )
    json_path: Path | None = Field(
        default=None,
        alias="json",
        description="Write the run report here",
    )

    @model_validator(mode="after")
    def _one_source(self) -> RunCommand:
        if (self.example is None) == (self.file is None):
            raise ValueError("give exactly one of --example or --file")
        return self

    def execute(self, settings: Settings) -> int:
        """Run the solve and write the requested outputs.

        Args:
            settings: loaded application settings

        Returns:
            Exit code
        """
        cfg = self.solver_config(settings)
        if self.variant is not None:
            cfg = cfg.model_copy(update={"variant": self.variant})

        try:
            case = self.build_case(self.n)
        except (ValueError, OSError, ValidationError) as e:
            logger.error("Cannot build problem: {error}", error=str(e))
            return EXIT_ERROR

        inst = case.instance
        logger.info(
            "Solving {name} on n={n} with {variant}",
            name=case.name,
            n=inst.grid.n,
            variant=cfg.variant,
        )
        report = solve(inst, self.initial_state(case), cfg)

        error = None
        if case.exact_control is not None:
            error = control_error(report.final_control, case.exact_control)
            logger.info(
                "Control error: max {linf:.4e}, weighted L2 {l2:.4e}",
                linf=error.linf,
                l2=error.l2_weighted,
            )

        summary = ProblemSummary(
            source=case.name,
            n=inst.grid.n,
            h=inst.grid.h,
            alpha=inst.alpha,
            initial_guess=self.init,
            formula=self.formula if case.name == "example1" else None,
        )
        try:
            if self.csv_path is not None:
                write_records_csv(self.csv_path, report.iterations)
            if self.json_path is not None:
                write_report_json(
                    self.json_path,
                    RunReport.from_solve(report, cfg, summary, error),
                )
        except OSError as e:
            logger.error("Cannot write output: {error}", error=str(e))
            return EXIT_ERROR

        return EXIT_CONVERGED if report.converged else EXIT_SOLVER_FAILED
