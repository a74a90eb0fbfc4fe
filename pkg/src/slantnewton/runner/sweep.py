"""Parameter sweeps over grid size, c1 and variant."""

from __future__ import annotations

import os
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from pydantic import BaseModel, Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from slantnewton.core.config import SolverConfig, Variant
from slantnewton.core.log import logger
from slantnewton.model.problem import ProblemInstance, State
from slantnewton.solver.newton import solve

# Builds the problem and starting point for one grid size.
CaseFactory = Callable[[int], tuple[ProblemInstance, State]]


class ThreadSettings(BaseSettings):
    """Worker cap, read from ISSNG_THREADS."""

    model_config = SettingsConfigDict(env_prefix="ISSNG_")

    threads: int | None = Field(default=None, gt=0)


@dataclass(frozen=True, order=True)
class SweepCase:
    n: int
    c1: float
    variant: Variant


class SweepRow(BaseModel):
    h: float
    c1: float
    variant: Variant
    norm_ry: float
    norm_rp: float
    iters: int
    wall_time: float
    peak_krylov_bytes: int
    failure_reason: str = ""


SWEEP_COLUMNS = tuple(SweepRow.model_fields)


def worker_count(cases: int, threads: int | None = None) -> int:
    """Threads to use: explicit cap, else ISSNG_THREADS, else CPUs."""
    cap = threads or ThreadSettings().threads or os.cpu_count() or 1
    return max(1, min(cases, cap))


class SweepRunner:
    """Run one solve per (n, c1, variant) and collect table rows."""

    def __init__(
        self,
        factory: CaseFactory,
        solver: SolverConfig,
        threads: int | None = None,
    ):
        """Initialize sweep runner.

        Args:
            factory: problem and start for a grid size
            solver: base solver settings; c1 and variant are replaced
                per case
            threads: worker cap (default from ISSNG_THREADS)
        """
        self.factory = factory
        self.solver = solver
        self.threads = threads

    def cases(
        self,
        grids: Sequence[int],
        c1_values: Sequence[float],
        variants: Sequence[Variant],
    ) -> list[SweepCase]:
        if not grids or not c1_values or not variants:
            raise ValueError("sweep needs at least one grid, c1 and variant")
        return sorted(
            SweepCase(n, c1, variant)
            for n in grids
            for c1 in c1_values
            for variant in variants
        )

    def run_case(self, case: SweepCase) -> SweepRow:
        cfg = self.solver.model_copy(
            update={"c1": case.c1, "variant": case.variant}
        )
        inst, z0 = self.factory(case.n)
        try:
            report = solve(inst, z0, cfg)
        except (ValueError, ArithmeticError) as e:
            logger.error(
                "Sweep case failed: {error}",
                error=str(e),
                n=case.n,
                c1=case.c1,
                variant=case.variant,
            )
            return SweepRow(
                h=inst.grid.h,
                c1=case.c1,
                variant=case.variant,
                norm_ry=float("nan"),
                norm_rp=float("nan"),
                iters=0,
                wall_time=0.0,
                peak_krylov_bytes=0,
                failure_reason=f"error: {e}",
            )
        return SweepRow(
            h=inst.grid.h,
            c1=case.c1,
            variant=case.variant,
            norm_ry=report.final_norm_ry,
            norm_rp=report.final_norm_rp,
            iters=report.newton_iterations,
            wall_time=report.wall_time,
            peak_krylov_bytes=report.peak_krylov_bytes,
            failure_reason=str(report.failure_reason or ""),
        )

    def run(
        self,
        grids: Sequence[int],
        c1_values: Sequence[float],
        variants: Sequence[Variant],
    ) -> list[SweepRow]:
        """Rows ordered by (n, c1, variant) whatever the finish order.

        Raises:
            ValueError: an empty list
        """
        cases = self.cases(grids, c1_values, variants)
        workers = worker_count(len(cases), self.threads)
        logger.info(
            "Sweeping {count} cases on {workers} threads",
            count=len(cases),
            workers=workers,
        )
        with ThreadPoolExecutor(max_workers=workers) as pool:
            # map() yields in submission order.
            return list(pool.map(self.run_case, cases))
