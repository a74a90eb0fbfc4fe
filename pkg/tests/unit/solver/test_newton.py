"""Tests for forcing terms, the nonmonotone line search and solve()."""

import math

import numpy as np
import pytest

from slantnewton.core.config import SolverConfig
from slantnewton.core.result import FailureReason
from slantnewton.discretization.grid import GridFunction, make_grid
from slantnewton.model.examples import example1, example2
from slantnewton.model.problem import (
    CUBIC,
    Bounds,
    ProblemInstance,
    SlantOperator,
    State,
    residual,
)
from slantnewton.solver.newton import (
    LineSearchError,
    backtrack,
    forcing_term,
    nonmonotone_linesearch,
    reference_merit,
    safeguarded_forcing,
    solve,
    stopping_ratio,
)


class TestForcingTerm:
    def test_first_iteration_uses_eta0(self):
        assert forcing_term(0, [10.0], SolverConfig(eta0=0.3)) == 0.3

    def test_eta0_clamped_to_eta_max(self):
        cfg = SolverConfig(eta0=0.5, eta_max=0.2)
        assert forcing_term(0, [10.0], cfg) == 0.2

    def test_second_iteration_compares_with_start(self):
        cfg = SolverConfig(gamma=0.9, a1=2.0)
        eta = forcing_term(1, [10.0, 5.0], cfg)
        assert eta == pytest.approx(0.9 * 0.25)

    def test_literal_history_skips_start(self):
        cfg = SolverConfig(gamma=1.0, a1=2.0, forcing_history="literal")
        # Past window is j = 1 only: reference 4, not 100.
        eta = forcing_term(2, [100.0, 4.0, 2.0], cfg)
        assert eta == pytest.approx(0.25)

    def test_all_history_includes_start(self):
        cfg = SolverConfig(gamma=1.0, a1=2.0, forcing_history="all")
        eta = forcing_term(2, [100.0, 4.0, 2.0], cfg)
        assert eta == pytest.approx(0.02 ** 2)

    def test_growth_clamped_to_eta_max(self):
        cfg = SolverConfig(gamma=1.0, a1=2.0, eta_max=0.9)
        assert forcing_term(1, [1.0, 3.0], cfg) == 0.9

    def test_zero_reference_gives_zero(self):
        assert forcing_term(1, [0.0, 0.0], SolverConfig()) == 0.0

    def test_empty_history_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            forcing_term(0, [], SolverConfig())

    def test_short_history_rejected(self):
        with pytest.raises(ValueError, match="need 3"):
            forcing_term(2, [1.0, 0.5], SolverConfig())


class TestSafeguardedForcing:
    def test_loose_target_unchanged(self):
        assert safeguarded_forcing(0.5, 1.0, 1.0, SolverConfig()) == 0.5

    def test_floor_at_eta_min(self):
        eta = safeguarded_forcing(1e-14, 1.0, 1.0, SolverConfig())
        assert eta == 1e-10

    def test_raised_near_the_stop_test(self):
        # 1e-3 * 1e-8 * 10 / 1e-6
        eta = safeguarded_forcing(1e-14, 1e-6, 10.0, SolverConfig())
        assert eta == pytest.approx(1e-4)

    def test_never_above_eta_max(self):
        eta = safeguarded_forcing(1e-14, 1e-20, 1.0, SolverConfig())
        assert eta == 0.9

    def test_disabled(self):
        cfg = SolverConfig(eta_min=0.0, eta_safeguard=0.0)
        assert safeguarded_forcing(1e-14, 1e-6, 10.0, cfg) == 1e-14

    def test_zero_residual(self):
        assert safeguarded_forcing(0.0, 0.0, 1.0, SolverConfig()) == 1e-10


def test_stopping_ratio_normalizes_large_start():
    assert stopping_ratio(1.0, 1.0, 10.0, 10.0) == pytest.approx(0.1)


def test_stopping_ratio_keeps_small_start_absolute():
    assert stopping_ratio(1e-3, 1e-3, 0.1, 0.1) == pytest.approx(2e-3)


def test_reference_merit_window():
    history = [5.0, 1.0, 3.0, 2.0]
    assert reference_merit(history) == 5.0
    assert reference_merit(history, window=2) == 3.0
    assert reference_merit(history, window=1) == 2.0
    with pytest.raises(ValueError):
        reference_merit([])


class TestBacktrack:
    @staticmethod
    def parabola(delta):
        return (1.0 - delta) ** 2

    def test_full_step_accepted(self):
        delta, backtracks, value = backtrack(
            self.parabola, -2.0, 1.0, SolverConfig(c1=0.5)
        )
        assert (delta, backtracks, value) == (1.0, 0, 0.0)

    def test_strict_coefficient_forces_reductions(self):
        delta, backtracks, value = backtrack(
            self.parabola, -2.0, 1.0, SolverConfig(c1=0.9, theta=0.5)
        )
        assert delta == 0.125
        assert backtracks == 3
        assert value == pytest.approx(0.765625)

    def test_nonmonotone_reference_admits_full_step(self):
        delta, backtracks, _ = backtrack(
            self.parabola, -2.0, 2.0, SolverConfig(c1=0.9)
        )
        assert (delta, backtracks) == (1.0, 0)

    def test_non_finite_trials_rejected(self):
        def phi(delta):
            return math.inf if delta > 0.3 else (1.0 - delta) ** 2

        delta, backtracks, _ = backtrack(phi, -2.0, 1.0, SolverConfig())
        assert delta == 0.25
        assert backtracks == 2

    def test_non_descent_direction_rejected(self):
        with pytest.raises(ValueError, match="descent"):
            backtrack(self.parabola, 0.0, 1.0, SolverConfig())

    def test_exhaustion_raises(self):
        calls = []

        def phi(delta):
            calls.append(delta)
            return 10.0

        with pytest.raises(LineSearchError):
            backtrack(phi, -1.0, 1.0, SolverConfig(max_backtracks=3))
        assert len(calls) == 4


def small_instance(n=6):
    grid = make_grid(n)
    x1, x2 = grid.coordinates()
    return ProblemInstance(
        grid=grid,
        nonlinearity=CUBIC,
        bounds=Bounds(-5.0, 5.0),
        alpha=0.1,
        f=GridFunction(grid, 10 * np.sin(np.pi * x1) * x2),
        yd=GridFunction(grid, np.cos(np.pi * x2)),
    )


def test_linesearch_returns_accepted_point():
    inst = small_instance()
    z = np.zeros(inst.dim)
    res = residual(inst, z)
    op = SlantOperator(inst, z)
    d = np.linalg.solve(op.assemble().toarray(), -res.vector)
    slope = float(op.rmatvec(res.vector) @ d)
    outcome = nonmonotone_linesearch(
        inst, z, d, slope, [res.merit], SolverConfig()
    )
    np.testing.assert_array_equal(outcome.point, z + outcome.delta * d)
    assert outcome.merit == residual(inst, outcome.point).merit
    assert outcome.merit < res.merit


class TestSolve:
    def test_example1_converges(self):
        case = example1(16)
        report = solve(case.instance, State.zeros(case.instance.grid))
        assert report.converged
        assert report.failure_reason is None
        assert report.iterations[-1].tau <= 1e-8
        assert [r.k for r in report.iterations] == list(
            range(1, report.newton_iterations + 1)
        )
        assert report.total_gmres_iters == sum(
            r.gmres_iters for r in report.iterations
        )
        assert report.peak_krylov_bytes > 0
        assert report.final_control.grid == case.instance.grid
        assert len(report.norm_history()) == report.newton_iterations + 1

    def test_inexactness_and_descent_hold_every_step(self):
        case = example2(12)
        inst = case.instance
        steps = []
        report = solve(
            inst,
            State.constant(inst.grid, 1.0),
            callback=steps.append,
        )
        assert report.converged
        assert len(steps) == report.newton_iterations
        for step in steps:
            F = step.residual.vector
            op = SlantOperator(inst, step.z)
            norm_F = np.linalg.norm(F)
            linear = np.linalg.norm(F + op.matvec(step.direction))
            assert linear <= step.eta * norm_F * (1 + 1e-10)
            descent = -op.rmatvec(F) @ step.direction
            assert descent >= (1 - step.eta) * norm_F ** 2 * (1 - 1e-8)

    def test_issng_takes_full_steps(self):
        case = example1(12)
        report = solve(
            case.instance,
            State.zeros(case.instance.grid),
            SolverConfig(variant="issng"),
        )
        assert report.variant == "issng"
        assert all(r.delta == 1.0 for r in report.iterations)
        assert all(r.backtracks == 0 for r in report.iterations)

    def test_full_step_prefix_matches_issng(self):
        """Until the first backtrack both variants compute the same
        iterates bit for bit."""
        inst = example2(12).instance
        z0 = State.constant(inst.grid, 2.0)
        with_ls = solve(inst, z0, SolverConfig(variant="issng-l"))
        plain = solve(inst, z0, SolverConfig(variant="issng"))
        for a, b in zip(with_ls.iterations, plain.iterations, strict=False):
            if a.delta != 1.0:
                break
            assert a.norm_F == b.norm_F
            assert a.eta == b.eta
            assert a.gmres_iters == b.gmres_iters

    def test_already_solved_start(self):
        grid = make_grid(5)
        inst = ProblemInstance(
            grid=grid,
            nonlinearity=CUBIC,
            bounds=Bounds(),
            alpha=1.0,
            f=GridFunction.zeros(grid),
            yd=GridFunction.zeros(grid),
        )
        report = solve(inst, State.zeros(grid))
        assert report.converged
        assert report.newton_iterations == 0

    def test_iteration_cap(self):
        case = example1(12)
        report = solve(
            case.instance,
            State.zeros(case.instance.grid),
            SolverConfig(max_newton=1),
        )
        assert not report.converged
        assert report.failure_reason == FailureReason.MAX_NEWTON_EXHAUSTED
        assert report.newton_iterations == 1

    def test_overflowing_start(self):
        case = example1(8)
        report = solve(
            case.instance, State.constant(case.instance.grid, 1e200)
        )
        assert report.failure_reason == FailureReason.NON_FINITE_STATE
        assert report.newton_iterations == 0

    def test_gmres_budget_exhausted(self):
        case = example1(12)
        cfg = SolverConfig(
            eta0=0.0,
            eta_max=0.0,
            krylov={"max_iters": 1, "restart": 1},
        )
        report = solve(case.instance, State.zeros(case.instance.grid), cfg)
        assert report.failure_reason == FailureReason.GMRES_NOT_CONVERGED

    def test_direct_solver(self):
        case = example1(12)
        report = solve(
            case.instance,
            State.zeros(case.instance.grid),
            SolverConfig(linear_solver="direct"),
        )
        assert report.converged
        assert report.total_gmres_iters == 0
        assert all(r.gmres_relres < 1e-8 for r in report.iterations)

    def test_warm_started_gmres(self):
        case = example1(12)
        cfg = SolverConfig(krylov={"initial_guess": "previous"})
        report = solve(case.instance, State.zeros(case.instance.grid), cfg)
        assert report.converged

    def test_large_c1_fails_first_line_search(self):
        # With one merit in the history and c1 > 1 the bound
        # Q0 + c1 * delta * slope lies below the merit along d.
        case = example1(12)
        z0 = State.zeros(case.instance.grid)
        default = solve(case.instance, z0, SolverConfig(c1=0.5))
        strict = solve(case.instance, z0, SolverConfig(c1=2.3))
        assert default.converged
        assert strict.failure_reason == FailureReason.LINE_SEARCH_FAILED
        assert strict.newton_iterations == 0

    def test_example2_converges_from_zero_with_defaults(self):
        """The forcing term falls to round-off in the last steps; the
        GMRES target must stay reachable."""
        case = example2(32)
        report = solve(case.instance, State.zeros(case.instance.grid))
        assert report.converged, report.failure_reason
        last = report.iterations[-1]
        assert last.delta == 1.0
        assert last.backtracks == 0
        for record in report.iterations:
            assert record.eta >= record.gmres_relres
            assert record.eta >= SolverConfig().eta_min

    def test_deterministic(self):
        case = example2(10)
        z0 = State.constant(case.instance.grid, 1.0)
        first = solve(case.instance, z0)
        second = solve(case.instance, z0)
        assert [r.model_dump() for r in first.iterations] == [
            r.model_dump() for r in second.iterations
        ]

    def test_grid_mismatch_rejected(self):
        case = example1(8)
        with pytest.raises(ValueError, match="grid mismatch"):
            solve(case.instance, State.zeros(make_grid(9)))
