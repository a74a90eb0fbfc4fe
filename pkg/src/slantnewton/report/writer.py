"""CSV and JSON output for solves and sweeps.

Floats are written with repr(), the shortest decimal that parses back
to the same double, so files carry the computed values exactly.
"""

from __future__ import annotations

import csv
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field

from slantnewton.core.config import SolverConfig
from slantnewton.core.result import (
    RECORD_COLUMNS,
    FailureReason,
    IterationRecord,
    SolveReport,
)
from slantnewton.model.examples import ControlError


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[BaseModel | dict],
) -> None:
    """Header row plus one line per row, in `columns` order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            data = row if isinstance(row, dict) else row.model_dump()
            writer.writerow(format_value(data[c]) for c in columns)


def write_records_csv(
    path: Path, records: Sequence[IterationRecord]
) -> None:
    write_rows(path, RECORD_COLUMNS, records)


def read_records_csv(path: Path) -> list[IterationRecord]:
    with open(path, newline="", encoding="utf-8") as f:
        return [
            IterationRecord.model_validate(row)
            for row in csv.DictReader(f)
        ]


class ProblemSummary(BaseModel):
    source: str
    n: int
    h: float
    alpha: float
    initial_guess: str
    formula: str | None = None


class RunReport(BaseModel):
    """Everything `slantnewton run --json` writes."""

    model_config = ConfigDict(ser_json_inf_nan="constants")

    problem: ProblemSummary
    config: SolverConfig
    converged: bool
    failure_reason: FailureReason | None = None
    newton_iterations: int
    total_gmres_iters: int
    initial_norm_ry: float
    initial_norm_rp: float
    final_norm_ry: float
    final_norm_rp: float
    control_error: ControlError | None = None
    wall_time: float
    peak_krylov_bytes: int
    iterations: list[IterationRecord] = Field(default_factory=list)

    @classmethod
    def from_solve(
        cls,
        report: SolveReport,
        config: SolverConfig,
        problem: ProblemSummary,
        control_error: ControlError | None = None,
    ) -> RunReport:
        return cls(
            problem=problem,
            config=config,
            converged=report.converged,
            failure_reason=report.failure_reason,
            newton_iterations=report.newton_iterations,
            total_gmres_iters=report.total_gmres_iters,
            initial_norm_ry=report.initial_norm_ry,
            initial_norm_rp=report.initial_norm_rp,
            final_norm_ry=report.final_norm_ry,
            final_norm_rp=report.final_norm_rp,
            control_error=control_error,
            wall_time=report.wall_time,
            peak_krylov_bytes=report.peak_krylov_bytes,
            iterations=list(report.iterations),
        )


def write_report_json(path: Path, report: RunReport) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.model_dump_json(indent=2), encoding="utf-8")


def read_report_json(path: Path) -> RunReport:
    return RunReport.model_validate_json(
        Path(path).read_text(encoding="utf-8")
    )
