"""Tests for the discrete optimality system and its slant operator."""

import math

import numpy as np
import pytest

from slantnewton.discretization.grid import (
    GridFunction,
    assemble_neg_laplacian,
    make_grid,
)
from slantnewton.model.problem import (
    CUBIC,
    CUBIC_PLUS_LINEAR,
    NONLINEARITIES,
    Bounds,
    ProblemInstance,
    SlantOperator,
    State,
    apply_slant,
    apply_slant_transpose,
    assemble_slant,
    merit,
    merit_gradient,
    project_control,
    projection_mask,
    residual,
)


def make_instance(n, rng, bounds=None, alpha=0.5, nonlinearity=CUBIC):
    grid = make_grid(n)
    return ProblemInstance(
        grid=grid,
        nonlinearity=nonlinearity,
        bounds=bounds or Bounds(-1.0, 1.0),
        alpha=alpha,
        f=GridFunction(grid, rng.standard_normal(grid.size)),
        yd=GridFunction(grid, rng.standard_normal(grid.size)),
    )


def random_state(inst, rng, scale=1.0):
    return rng.standard_normal(inst.dim) * scale


class TestBounds:
    def test_defaults_are_unbounded(self):
        b = Bounds()
        assert b.lower == -math.inf
        assert b.upper == math.inf

    def test_crossed_bounds_rejected(self):
        with pytest.raises(ValueError, match="exceeds"):
            Bounds(1.0, 0.0)

    def test_nan_rejected(self):
        with pytest.raises(ValueError, match="NaN"):
            Bounds(math.nan, 1.0)

    def test_empty_infinite_box_rejected(self):
        with pytest.raises(ValueError, match="empty box"):
            Bounds(math.inf, math.inf)

    def test_degenerate_box_allowed(self):
        assert Bounds(0.5, 0.5).lower == 0.5


def test_alpha_must_be_positive(rng):
    with pytest.raises(ValueError, match="alpha"):
        make_instance(4, rng, alpha=0.0)


def test_registry_names():
    assert NONLINEARITIES["cubic"] is CUBIC
    assert NONLINEARITIES["cubic_plus_linear"] is CUBIC_PLUS_LINEAR


@pytest.mark.parametrize("nonlinearity", [CUBIC, CUBIC_PLUS_LINEAR])
def test_nonlinearity_derivatives(nonlinearity):
    y = np.linspace(-2.0, 2.0, 9)
    eps = 1e-6
    np.testing.assert_allclose(
        (nonlinearity.s(y + eps) - nonlinearity.s(y - eps)) / (2 * eps),
        nonlinearity.s1(y),
        rtol=1e-7,
        atol=1e-7,
    )
    np.testing.assert_allclose(
        (nonlinearity.s1(y + eps) - nonlinearity.s1(y - eps)) / (2 * eps),
        nonlinearity.s2(y),
        rtol=1e-7,
        atol=1e-7,
    )


def test_projection_clamps_and_masks():
    grid = make_grid(3)
    bounds = Bounds(-1.0, 2.0)
    p = GridFunction(grid, np.array([-3.0, -1.0, 0.0, 4.0]))
    u = project_control(p, 1.0, bounds)
    np.testing.assert_array_equal(u.values, [-1.0, -1.0, 0.0, 2.0])
    mask = projection_mask(p, 1.0, bounds)
    # Strict inequality: a value on the bound is inactive.
    np.testing.assert_array_equal(mask.values, [0.0, 0.0, 1.0, 0.0])


def test_unbounded_projection_is_scaling():
    grid = make_grid(3)
    p = GridFunction(grid, np.array([-3.0, -1.0, 0.0, 4.0]))
    u = project_control(p, 0.5, Bounds())
    np.testing.assert_array_equal(u.values, 2.0 * p.values)
    assert np.all(projection_mask(p, 0.5, Bounds()).values == 1.0)


def test_projection_idempotent_and_nonexpansive(rng):
    grid = make_grid(6)
    bounds = Bounds(-0.5, 0.75)
    alpha = 0.5
    p = GridFunction(grid, 2 * rng.standard_normal(grid.size))
    q = GridFunction(grid, 2 * rng.standard_normal(grid.size))
    u = project_control(p, alpha, bounds)
    again = project_control(
        GridFunction(grid, alpha * u.values), alpha, bounds
    )
    np.testing.assert_allclose(again.values, u.values, rtol=0, atol=1e-15)
    v = project_control(q, alpha, bounds)
    gap = np.abs(p.values - q.values) / alpha
    assert np.all(np.abs(u.values - v.values) <= gap + 1e-15)


def test_state_vector_round_trip():
    grid = make_grid(4)
    z = np.arange(2 * grid.size, dtype=float)
    state = State.from_vector(grid, z)
    np.testing.assert_array_equal(state.y.values, z[: grid.size])
    np.testing.assert_array_equal(state.stacked(), z)


def test_state_rejects_wrong_length():
    with pytest.raises(ValueError, match="expected vector"):
        State.from_vector(make_grid(4), np.zeros(5))


def test_residual_rejects_other_grid(rng):
    inst = make_instance(4, rng)
    with pytest.raises(ValueError, match="grid mismatch"):
        residual(inst, State.zeros(make_grid(5)))


@pytest.mark.parametrize("n", [3, 8])
def test_residual_matches_assembled_system(n, rng):
    inst = make_instance(n, rng)
    z = random_state(inst, rng)
    size = inst.grid.size
    y, p = z[:size], z[size:]
    lap = assemble_neg_laplacian(inst.grid)
    ry = lap @ y + y ** 3 - np.clip(p / inst.alpha, -1, 1) - inst.f.values
    rp = lap @ p + 3 * y ** 2 * p + y - inst.yd.values
    expected = np.concatenate([ry, rp])

    res = residual(inst, z)
    np.testing.assert_allclose(
        res.vector, expected, rtol=1e-12, atol=1e-12 * np.abs(expected).max()
    )
    assert res.norm_ry == pytest.approx(np.linalg.norm(ry))
    assert res.norm_rp == pytest.approx(np.linalg.norm(rp))
    assert res.merit == pytest.approx(0.5 * expected @ expected)
    assert merit(inst, z) == res.merit


def test_overflow_reports_non_finite(rng):
    inst = make_instance(4, rng)
    z = np.full(inst.dim, 1e200)
    res = residual(inst, z)
    assert not res.finite
    assert res.merit == math.inf


@pytest.mark.parametrize("n", [3, 8])
def test_slant_actions_match_assembled_matrix(n, rng):
    inst = make_instance(n, rng)
    # Spread p/alpha across both sides of the bounds.
    z = random_state(inst, rng, scale=0.8)
    G = assemble_slant(inst, z).toarray()
    d = rng.standard_normal(inst.dim)
    w = rng.standard_normal(inst.dim)

    gd = apply_slant(inst, z, d)
    gtw = apply_slant_transpose(inst, z, w)
    np.testing.assert_allclose(
        gd, G @ d, rtol=1e-12, atol=1e-12 * np.abs(G @ d).max()
    )
    np.testing.assert_allclose(
        gtw, G.T @ w, rtol=1e-12, atol=1e-12 * np.abs(G.T @ w).max()
    )


def test_slant_blocks_follow_definition(rng):
    inst = make_instance(3, rng, bounds=Bounds())
    z = random_state(inst, rng)
    op = SlantOperator(inst, z)
    size = inst.grid.size
    y, p = z[:size], z[size:]
    np.testing.assert_allclose(op.d1, 3 * y ** 2)
    np.testing.assert_allclose(op.d2, 6 * y * p)
    np.testing.assert_allclose(op.coupling, np.full(size, 1 / inst.alpha))


@pytest.mark.parametrize("n", [3, 8])
def test_adjoint_identity(n, rng):
    inst = make_instance(n, rng)
    z = random_state(inst, rng, scale=0.8)
    op = SlantOperator(inst, z)
    for _ in range(20):
        d = rng.standard_normal(inst.dim)
        w = rng.standard_normal(inst.dim)
        lhs = op.matvec(d) @ w
        rhs = d @ op.rmatvec(w)
        scale = np.linalg.norm(op.matvec(d)) * np.linalg.norm(w)
        assert abs(lhs - rhs) <= 1e-12 * scale


def test_apply_slant_is_linear(rng):
    inst = make_instance(5, rng)
    z = random_state(inst, rng, scale=0.8)
    d1 = rng.standard_normal(inst.dim)
    d2 = rng.standard_normal(inst.dim)
    combined = apply_slant(inst, z, 2.5 * d1 - 0.75 * d2)
    separate = 2.5 * apply_slant(inst, z, d1) - 0.75 * apply_slant(
        inst, z, d2
    )
    np.testing.assert_allclose(
        combined, separate, rtol=1e-12, atol=1e-12 * np.abs(separate).max()
    )


def test_apply_slant_matches_central_differences(rng):
    """With every p/alpha strictly inside the box F is smooth."""
    inst = make_instance(5, rng, bounds=Bounds(-0.5, 0.5), alpha=1.0)
    size = inst.grid.size
    eps = 1e-6
    for _ in range(5):
        y = 0.3 * rng.standard_normal(size)
        p = rng.uniform(-0.4, 0.4, size)
        z = np.concatenate([y, p])
        d = rng.standard_normal(inst.dim)
        d /= np.linalg.norm(d)
        fd = (
            residual(inst, z + eps * d).vector
            - residual(inst, z - eps * d).vector
        ) / (2 * eps)
        gd = apply_slant(inst, z, d)
        assert np.linalg.norm(fd - gd) <= 1e-6 * np.linalg.norm(gd)


def test_slant_consistency_across_the_kinks(rng):
    """||F(z + t d) - F(z) - G(z + t d) t d|| vanishes like t**2, also
    where p/alpha sits exactly on a bound."""
    inst = make_instance(5, rng, bounds=Bounds(-0.5, 0.5), alpha=1.0)
    size = inst.grid.size
    y = 0.3 * rng.standard_normal(size)
    p = rng.uniform(-0.4, 0.4, size)
    p[::3] = 0.5
    p[1::3] = -0.5
    z = np.concatenate([y, p])
    d = rng.standard_normal(inst.dim)
    d /= np.linalg.norm(d)
    base = residual(inst, z).vector

    def err(t):
        moved = z + t * d
        return np.linalg.norm(
            residual(inst, moved).vector
            - base
            - apply_slant(inst, moved, t * d)
        )

    errors = [err(t) for t in (1e-2, 1e-3, 1e-4)]
    assert errors[1] < 0.02 * errors[0]
    assert errors[2] < 0.02 * errors[1]


def test_linear_operator_view(rng):
    inst = make_instance(4, rng)
    z = random_state(inst, rng)
    op = SlantOperator(inst, z)
    lin = op.as_linear_operator()
    d = rng.standard_normal(inst.dim)
    assert lin.shape == (inst.dim, inst.dim)
    np.testing.assert_array_equal(lin.matvec(d), op.matvec(d))
    np.testing.assert_array_equal(lin.rmatvec(d), op.rmatvec(d))


def test_merit_gradient_matches_finite_differences(rng):
    """Away from the kinks of the projection G is the Jacobian."""
    inst = make_instance(4, rng, bounds=Bounds(-1.0, 1.0), alpha=1.0)
    size = inst.grid.size
    eps = 1e-5
    for _ in range(10):
        y = 0.3 * rng.standard_normal(size)
        # |p| < 0.5 keeps every node strictly inside the box.
        p = rng.uniform(-0.5, 0.5, size)
        z = np.concatenate([y, p])
        v = rng.standard_normal(inst.dim)
        v /= np.linalg.norm(v)
        fd = (merit(inst, z + eps * v) - merit(inst, z - eps * v)) / (
            2 * eps
        )
        exact = merit_gradient(inst, z) @ v
        assert abs(fd - exact) <= 1e-6 * max(abs(exact), 1.0)


def test_merit_gradient_with_active_bounds(rng):
    """Nodes clamped on both sides contribute no p/alpha coupling."""
    inst = make_instance(3, rng, bounds=Bounds(-1.0, 1.0), alpha=1.0)
    size = inst.grid.size
    y = 0.2 * rng.standard_normal(size)
    p = np.array([3.0, -3.0, 0.25, 2.5])
    z = np.concatenate([y, p])
    eps = 1e-6
    grad = merit_gradient(inst, z)
    for k in range(inst.dim):
        e = np.zeros(inst.dim)
        e[k] = eps
        fd = (merit(inst, z + e) - merit(inst, z - e)) / (2 * eps)
        assert fd == pytest.approx(grad[k], rel=1e-6, abs=1e-6)
