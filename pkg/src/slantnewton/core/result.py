"""Result types for Newton solves."""

from __future__ import annotations

from enum import StrEnum
from typing import Any

from pydantic import BaseModel, ConfigDict, Field


class FailureReason(StrEnum):
    GMRES_NOT_CONVERGED = "gmres_not_converged"
    LINE_SEARCH_FAILED = "line_search_failed"
    MAX_NEWTON_EXHAUSTED = "max_newton_exhausted"
    NON_FINITE_STATE = "non_finite_state"
    DESCENT_VIOLATION = "descent_violation"


class IterationRecord(BaseModel):
    """One Newton step z_{k-1} -> z_k.

    eta, gmres_*, delta and backtracks describe the step that produced
    z_k; the norms, tau and merit are measured at z_k.
    """

    model_config = ConfigDict(ser_json_inf_nan="constants")

    k: int
    norm_F: float
    norm_ry: float
    norm_rp: float
    eta: float
    gmres_iters: int
    gmres_relres: float
    delta: float
    backtracks: int
    tau: float
    merit: float


# Column order of the per-iteration CSV.
RECORD_COLUMNS = tuple(IterationRecord.model_fields)


class SolveReport(BaseModel):
    """Outcome of one solve. final_state and final_control are not
    serialized."""

    model_config = ConfigDict(
        arbitrary_types_allowed=True, ser_json_inf_nan="constants"
    )

    converged: bool
    iterations: list[IterationRecord] = Field(default_factory=list)
    final_state: Any = Field(default=None, exclude=True)
    final_control: Any = Field(default=None, exclude=True)
    wall_time: float = 0.0
    failure_reason: FailureReason | None = None
    variant: str = "issng-l"
    initial_norm_F: float = 0.0
    initial_norm_ry: float = 0.0
    initial_norm_rp: float = 0.0
    total_gmres_iters: int = 0
    peak_krylov_bytes: int = 0

    @property
    def newton_iterations(self) -> int:
        return len(self.iterations)

    @property
    def final_norm_ry(self) -> float:
        if self.iterations:
            return self.iterations[-1].norm_ry
        return self.initial_norm_ry

    @property
    def final_norm_rp(self) -> float:
        if self.iterations:
            return self.iterations[-1].norm_rp
        return self.initial_norm_rp

    def norm_history(self) -> list[float]:
        """||F(z_k)|| for k = 0, 1, ..."""
        return [self.initial_norm_F] + [r.norm_F for r in self.iterations]
