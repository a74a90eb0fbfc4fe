"""Inexact semismooth Newton-GMRES with nonmonotone line search.

Each iteration solves G(z_k) d = -F(z_k) only to the relative accuracy
eta_k, then (variant issng-l) backtracks delta from delta0 until

    Q(z_k + delta d) <= max(recent Q) + c1 * delta * grad Q(z_k)^T d.

Variant issng always takes delta = 1.
"""

from __future__ import annotations

import math
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import splu

from slantnewton.core.config import SolverConfig
from slantnewton.core.log import logger
from slantnewton.core.result import FailureReason, IterationRecord, SolveReport
from slantnewton.model.problem import (
    ProblemInstance,
    Residual,
    SlantOperator,
    State,
    project_control,
    residual,
)
from slantnewton.solver.krylov import gmres


class LineSearchError(RuntimeError):
    """No stepsize met the sufficient-decrease test."""


@dataclass
class LineSearchOutcome:
    delta: float
    backtracks: int
    merit: float
    point: np.ndarray
    residual: Residual


@dataclass
class NewtonStep:
    """What a solve callback sees once the direction is known."""

    k: int
    z: np.ndarray
    direction: np.ndarray
    residual: Residual
    eta: float
    gradient_dot_direction: float


@dataclass
class _Direction:
    vector: np.ndarray
    iterations: int
    relres: float
    converged: bool
    basis_bytes: int


def forcing_term(
    k: int, norm_history: Sequence[float], cfg: SolverConfig
) -> float:
    """eta_k = gamma * (||F(z_k)|| / max past ||F(z_j)||) ** a1.

    eta_0 is cfg.eta0. The past window is j = 1..k-1 (j = 0 at k = 1)
    under forcing_history = "literal", and j = 0..k-1 under "all".
    The result is clamped to [0, eta_max].
    """
    if not norm_history:
        raise ValueError("norm history is empty")
    if len(norm_history) < k + 1:
        raise ValueError(
            f"need {k + 1} residual norms for k={k}, "
            f"got {len(norm_history)}"
        )
    if k == 0:
        eta = cfg.eta0
    else:
        first = 0 if (k == 1 or cfg.forcing_history == "all") else 1
        reference = max(norm_history[first:k])
        current = norm_history[k]
        eta = 0.0 if reference == 0 else (
            cfg.gamma * (current / reference) ** cfg.a1
        )
    return min(max(eta, 0.0), cfg.eta_max)


def safeguarded_forcing(
    eta: float, norm_F: float, stop_scale: float, cfg: SolverConfig
) -> float:
    """GMRES target actually requested at a Newton step.

    eta is raised to cfg.eta_min and to

        eta_safeguard * tol * stop_scale / ||F(z_k)||

    where stop_scale = max(1, ||r_y^0|| + ||r_p^0||). Near the end of a
    run the forcing term can fall to round-off level; solving that
    tightly buys nothing once one more step meets the stop test. The
    result stays in [0, eta_max].
    """
    floor = cfg.eta_min
    if norm_F > 0:
        floor = max(floor, cfg.eta_safeguard * cfg.tol * stop_scale / norm_F)
    return min(max(eta, floor), cfg.eta_max)


def stopping_ratio(
    norm_ry_k: float,
    norm_rp_k: float,
    norm_ry_0: float,
    norm_rp_0: float,
) -> float:
    """Residual size relative to the starting one:

        tau_k = (|r_y^k| + |r_p^k|) / max(1, |r_y^0| + |r_p^0|)
    """
    return (norm_ry_k + norm_rp_k) / max(1.0, norm_ry_0 + norm_rp_0)


def reference_merit(
    merit_history: Sequence[float], window: int | None = None
) -> float:
    """Largest of the last `window` merits (all of them when None)."""
    if not merit_history:
        raise ValueError("merit history is empty")
    recent = merit_history if window is None else merit_history[-window:]
    return max(recent)


def backtrack(
    phi: Callable[[float], float],
    slope: float,
    reference: float,
    cfg: SolverConfig,
) -> tuple[float, int, float]:
    """First delta in delta0, theta*delta0, ... with
    phi(delta) <= reference + c1 * delta * slope.

    Non-finite phi values count as rejections.

    Returns:
        (delta, number of reductions, phi(delta))

    Raises:
        ValueError: slope is not negative
        LineSearchError: max_backtracks reductions did not suffice
    """
    if not slope < 0:
        raise ValueError(
            f"direction is not a descent direction (slope={slope})"
        )
    delta = cfg.delta0
    for backtracks in range(cfg.max_backtracks + 1):
        value = phi(delta)
        bound = reference + cfg.c1 * delta * slope
        if math.isfinite(value) and value <= bound:
            return delta, backtracks, value
        logger.trace(
            "Line search rejected delta={delta:.3e}",
            delta=delta,
            merit=value,
            bound=bound,
        )
        delta *= cfg.theta
    raise LineSearchError(
        f"no acceptable stepsize after {cfg.max_backtracks} reductions"
    )


def nonmonotone_linesearch(
    inst: ProblemInstance,
    z: State | np.ndarray,
    d: np.ndarray,
    slope: float,
    merit_history: Sequence[float],
    cfg: SolverConfig,
) -> LineSearchOutcome:
    """Backtracking against the max of recent merits.

    The residual of the accepted point is returned so the caller does
    not evaluate F there again.
    """
    base = z.stacked() if isinstance(z, State) else np.asarray(z, float)
    trials: dict[float, tuple[np.ndarray, Residual]] = {}

    def phi(delta: float) -> float:
        point = base + delta * d
        res = residual(inst, point)
        trials[delta] = (point, res)
        return res.merit

    delta, backtracks, value = backtrack(
        phi,
        slope,
        reference_merit(merit_history, cfg.window),
        cfg,
    )
    point, res = trials[delta]
    return LineSearchOutcome(delta, backtracks, value, point, res)


def _newton_direction(
    op: SlantOperator,
    rhs: np.ndarray,
    eta: float,
    cfg: SolverConfig,
    previous: np.ndarray | None,
) -> _Direction:
    if cfg.linear_solver == "direct":
        try:
            vector = splu(op.assemble().tocsc()).solve(rhs)
        except RuntimeError as e:
            logger.warn("Sparse LU failed: {error}", error=str(e))
            return _Direction(np.zeros_like(rhs), 0, math.inf, False, 0)
        relres = float(
            np.linalg.norm(rhs - op.matvec(vector)) / np.linalg.norm(rhs)
        )
        return _Direction(vector, 0, relres, True, 0)

    # eta = 0 asks for an exact solve; GMRES needs a positive target.
    tol = max(eta, np.finfo(float).eps)
    x0 = previous if cfg.krylov.initial_guess == "previous" else None
    outcome = gmres(
        op.as_linear_operator(),
        rhs,
        tol_rel=tol,
        restart=cfg.krylov.restart,
        max_iters=cfg.krylov.max_iters,
        x0=x0,
    )
    logger.debug(
        "GMRES finished in {iterations} iterations",
        iterations=outcome.iterations,
        relative_residual=outcome.relative_residual,
        target=tol,
        converged=outcome.converged,
    )
    return _Direction(
        outcome.solution,
        outcome.iterations,
        outcome.relative_residual,
        outcome.converged,
        outcome.peak_basis_bytes,
    )


def solve(
    inst: ProblemInstance,
    z0: State,
    cfg: SolverConfig | None = None,
    callback: Callable[[NewtonStep], None] | None = None,
) -> SolveReport:
    """Run the Newton iteration from z0.

    Failures (GMRES, line search, iteration cap, overflow, lost
    descent) end the run and are reported in failure_reason; they are
    never raised.

    Args:
        inst: discrete problem
        z0: starting state/costate pair on inst.grid
        cfg: solver parameters (defaults when None)
        callback: called with each NewtonStep before the step is taken

    Returns:
        SolveReport with one IterationRecord per step taken.
    """
    cfg = cfg or SolverConfig()
    z0.y.require_grid(inst.grid)
    started = time.perf_counter()

    z = z0.stacked()
    res = residual(inst, z)
    report = SolveReport(converged=False, variant=cfg.variant)

    def finish(reason: FailureReason | None) -> SolveReport:
        report.converged = reason is None
        report.failure_reason = reason
        state = State.from_vector(inst.grid, z)
        report.final_state = state
        report.final_control = project_control(
            state.p, inst.alpha, inst.bounds
        )
        report.wall_time = time.perf_counter() - started
        if reason is None:
            logger.info(
                "Converged after {iterations} Newton iterations",
                iterations=report.newton_iterations,
                wall_time=report.wall_time,
            )
        else:
            logger.warn(
                "Solve failed: {reason}",
                reason=str(reason),
                iterations=report.newton_iterations,
            )
        return report

    if not res.finite:
        return finish(FailureReason.NON_FINITE_STATE)

    report.initial_norm_F = res.norm
    report.initial_norm_ry = res.norm_ry
    report.initial_norm_rp = res.norm_rp
    ry0, rp0 = res.norm_ry, res.norm_rp
    norm_history = [res.norm]
    merit_history = [res.merit]
    tau = stopping_ratio(ry0, rp0, ry0, rp0)
    stop_scale = max(1.0, ry0 + rp0)

    if cfg.c1 >= 1 and cfg.variant == "issng-l":
        logger.warn(
            "c1 = {c1} lies outside (0, 1); convergence is not guaranteed",
            c1=cfg.c1,
        )

    previous = None
    with logger.span(
        "Newton solve",
        n=inst.grid.n,
        variant=cfg.variant,
        alpha=inst.alpha,
    ):
        k = 0
        while True:
            if tau <= cfg.tol or res.norm == 0.0:
                return finish(None)
            if k >= cfg.max_newton:
                return finish(FailureReason.MAX_NEWTON_EXHAUSTED)

            eta = safeguarded_forcing(
                forcing_term(k, norm_history, cfg), res.norm, stop_scale, cfg
            )
            op = SlantOperator(inst, z)
            direction = _newton_direction(
                op, -res.vector, eta, cfg, previous
            )
            report.total_gmres_iters += direction.iterations
            report.peak_krylov_bytes = max(
                report.peak_krylov_bytes, direction.basis_bytes
            )
            if not direction.converged:
                # A stalled solve is still usable while it keeps the
                # residual within eta_max.
                if not direction.relres <= cfg.eta_max:
                    return finish(FailureReason.GMRES_NOT_CONVERGED)
                logger.warn(
                    "GMRES stalled at {relres:.3e} above target "
                    "{target:.3e}; continuing",
                    relres=direction.relres,
                    target=eta,
                    k=k,
                )
            # Record the accuracy actually reached.
            eta = max(eta, direction.relres)

            d = direction.vector
            previous = d
            slope = float(op.rmatvec(res.vector) @ d)
            if callback is not None:
                callback(NewtonStep(k, z.copy(), d.copy(), res, eta, slope))
            if not slope < 0:
                return finish(FailureReason.DESCENT_VIOLATION)

            if cfg.variant == "issng":
                delta, backtracks = 1.0, 0
                trial = z + delta * d
                trial_res = residual(inst, trial)
                if not trial_res.finite:
                    return finish(FailureReason.NON_FINITE_STATE)
            else:
                try:
                    outcome = nonmonotone_linesearch(
                        inst, z, d, slope, merit_history, cfg
                    )
                except LineSearchError as e:
                    logger.warn("Line search failed: {error}", error=str(e))
                    return finish(FailureReason.LINE_SEARCH_FAILED)
                delta, backtracks = outcome.delta, outcome.backtracks
                trial, trial_res = outcome.point, outcome.residual

            z, res = trial, trial_res
            k += 1
            norm_history.append(res.norm)
            merit_history.append(res.merit)
            tau = stopping_ratio(res.norm_ry, res.norm_rp, ry0, rp0)

            record = IterationRecord(
                k=k,
                norm_F=res.norm,
                norm_ry=res.norm_ry,
                norm_rp=res.norm_rp,
                eta=eta,
                gmres_iters=direction.iterations,
                gmres_relres=direction.relres,
                delta=delta,
                backtracks=backtracks,
                tau=tau,
                merit=res.merit,
            )
            report.iterations.append(record)
            logger.info(
                "Newton iteration {k}: ||F|| = {norm_F:.4e}, "
                "tau = {tau:.3e}",
                k=k,
                norm_F=record.norm_F,
                tau=tau,
                eta=eta,
                gmres_iters=direction.iterations,
                delta=delta,
                backtracks=backtracks,
            )
