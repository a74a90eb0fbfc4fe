"""Discrete optimality system of the box-constrained control problem.

With Phi the clamp onto [u_a, u_b], the unknown z = [y; p] solves

    F(z) = [ -Delta_h y + S(y) - Phi(p / alpha) - f ]
           [ -Delta_h p + S'(y) p + y - y_d         ] = 0,

and the optimal control is u = Phi(p / alpha). G(z) below is the
slanting function used in place of the Jacobian of F.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import LinearOperator

from slantnewton.discretization.grid import (
    Grid,
    GridFunction,
    assemble_neg_laplacian,
    neg_laplacian,
)

ScalarMap = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Nonlinearity:
    """S together with its first two derivatives, elementwise."""

    s: ScalarMap
    s1: ScalarMap
    s2: ScalarMap
    label: str


CUBIC = Nonlinearity(
    s=lambda y: y ** 3,
    s1=lambda y: 3.0 * y ** 2,
    s2=lambda y: 6.0 * y,
    label="cubic",
)

CUBIC_PLUS_LINEAR = Nonlinearity(
    s=lambda y: y ** 3 + y,
    s1=lambda y: 3.0 * y ** 2 + 1.0,
    s2=lambda y: 6.0 * y,
    label="cubic_plus_linear",
)

NONLINEARITIES: dict[str, Nonlinearity] = {
    CUBIC.label: CUBIC,
    CUBIC_PLUS_LINEAR.label: CUBIC_PLUS_LINEAR,
}


@dataclass(frozen=True)
class Bounds:
    """Box [lower, upper] for the control; infinite ends are allowed."""

    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        if math.isnan(self.lower) or math.isnan(self.upper):
            raise ValueError("bounds must not be NaN")
        if self.lower == math.inf or self.upper == -math.inf:
            raise ValueError(
                f"empty box: lower={self.lower}, upper={self.upper}"
            )
        if self.lower > self.upper:
            raise ValueError(
                f"lower bound {self.lower} exceeds upper bound {self.upper}"
            )


@dataclass(frozen=True)
class ProblemInstance:
    grid: Grid
    nonlinearity: Nonlinearity
    bounds: Bounds
    alpha: float
    f: GridFunction
    yd: GridFunction

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        self.f.require_grid(self.grid)
        self.yd.require_grid(self.grid)

    @property
    def dim(self) -> int:
        """Length of z = [y; p]."""
        return 2 * self.grid.size


@dataclass
class State:
    """State y and costate p on one grid."""

    y: GridFunction
    p: GridFunction

    def __post_init__(self):
        self.p.require_grid(self.y.grid)

    @property
    def grid(self) -> Grid:
        return self.y.grid

    @classmethod
    def zeros(cls, grid: Grid) -> State:
        return cls(GridFunction.zeros(grid), GridFunction.zeros(grid))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> State:
        return cls(
            GridFunction.constant(grid, value),
            GridFunction.constant(grid, value),
        )

    @classmethod
    def from_vector(cls, grid: Grid, z: np.ndarray) -> State:
        """Split a stacked [y; p] vector."""
        z = np.asarray(z, dtype=float)
        if z.shape != (2 * grid.size,):
            raise ValueError(
                f"expected vector of length {2 * grid.size}, "
                f"got shape {z.shape}"
            )
        return cls(
            GridFunction(grid, z[: grid.size].copy()),
            GridFunction(grid, z[grid.size:].copy()),
        )

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.y.values, self.p.values])


@dataclass
class Residual:
    """F(z) stacked as [r_y; r_p]."""

    vector: np.ndarray
    size: int = field(repr=False)

    @property
    def ry(self) -> np.ndarray:
        return self.vector[: self.size]

    @property
    def rp(self) -> np.ndarray:
        return self.vector[self.size:]

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.vector)))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    @property
    def norm_ry(self) -> float:
        return float(np.linalg.norm(self.ry))

    @property
    def norm_rp(self) -> float:
        return float(np.linalg.norm(self.rp))

    @property
    def merit(self) -> float:
        """Q = ||F||^2 / 2, +inf when F is not finite."""
        if not self.finite:
            return math.inf
        return 0.5 * float(self.vector @ self.vector)


def _as_state_vector(inst: ProblemInstance, z: State | np.ndarray):
    if isinstance(z, State):
        z.y.require_grid(inst.grid)
        return z.y.values, z.p.values
    z = np.asarray(z, dtype=float)
    if z.shape != (inst.dim,):
        raise ValueError(
            f"expected vector of length {inst.dim}, got shape {z.shape}"
        )
    return z[: inst.grid.size], z[inst.grid.size:]


def _clamp(v: np.ndarray, bounds: Bounds) -> np.ndarray:
    return np.maximum(bounds.lower, np.minimum(bounds.upper, v))


def _mask(v: np.ndarray, bounds: Bounds) -> np.ndarray:
    return ((bounds.lower < v) & (v < bounds.upper)).astype(float)


def project_control(
    p: GridFunction, alpha: float, bounds: Bounds
) -> GridFunction:
    """Phi(p / alpha) = max(u_a, min(u_b, p / alpha)) elementwise."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return GridFunction(p.grid, _clamp(p.values / alpha, bounds))


def projection_mask(
    p: GridFunction, alpha: float, bounds: Bounds
) -> GridFunction:
    """1 where u_a < p/alpha < u_b strictly, else 0."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return GridFunction(p.grid, _mask(p.values / alpha, bounds))


def residual(inst: ProblemInstance, z: State | np.ndarray) -> Residual:
    """Evaluate F(z).

    Overflow in S is not an error: the result then reports
    finite == False and the caller decides what to do.
    """
    y, p = _as_state_vector(inst, z)
    grid = inst.grid
    s = inst.nonlinearity
    with np.errstate(over="ignore", invalid="ignore"):
        ry = (
            neg_laplacian(grid, y)
            + s.s(y)
            - _clamp(p / inst.alpha, inst.bounds)
            - inst.f.values
        )
        rp = neg_laplacian(grid, p) + s.s1(y) * p + y - inst.yd.values
    return Residual(np.concatenate([ry, rp]), grid.size)


class SlantOperator:
    """G(z) with its diagonal blocks precomputed.

        G(z) = [ -Delta_h + D1      -(1/alpha) M ]
               [ I + D2             -Delta_h + D1 ]

    D1 = diag(S'(y)), D2 = diag(S''(y) p), M = diag(mask(p/alpha)).
    """

    def __init__(self, inst: ProblemInstance, z: State | np.ndarray):
        y, p = _as_state_vector(inst, z)
        self.grid = inst.grid
        self.dim = inst.dim
        s = inst.nonlinearity
        with np.errstate(over="ignore", invalid="ignore"):
            self.d1 = s.s1(y)
            self.d2 = s.s2(y) * p
        self.coupling = _mask(p / inst.alpha, inst.bounds) / inst.alpha

    def _split(self, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.shape != (self.dim,):
            raise ValueError(
                f"expected vector of length {self.dim}, got {v.shape}"
            )
        half = self.grid.size
        return v[:half], v[half:]

    def matvec(self, d: np.ndarray) -> np.ndarray:
        dy, dp = self._split(d)
        top = neg_laplacian(self.grid, dy) + self.d1 * dy - self.coupling * dp
        bottom = (
            dy + self.d2 * dy + neg_laplacian(self.grid, dp) + self.d1 * dp
        )
        return np.concatenate([top, bottom])

    def rmatvec(self, w: np.ndarray) -> np.ndarray:
        wy, wp = self._split(w)
        top = (
            neg_laplacian(self.grid, wy) + self.d1 * wy + (1.0 + self.d2) * wp
        )
        bottom = (
            -self.coupling * wy + neg_laplacian(self.grid, wp) + self.d1 * wp
        )
        return np.concatenate([top, bottom])

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator(
            (self.dim, self.dim),
            matvec=self.matvec,
            rmatvec=self.rmatvec,
            dtype=float,
        )

    def assemble(self) -> sparse.csr_matrix:
        """Sparse block matrix of G(z)."""
        lap = assemble_neg_laplacian(self.grid)
        d1 = sparse.diags(self.d1)
        return sparse.bmat(
            [
                [lap + d1, sparse.diags(-self.coupling)],
                [sparse.diags(1.0 + self.d2), lap + d1],
            ],
            format="csr",
        )


def apply_slant(
    inst: ProblemInstance, z: State | np.ndarray, d: np.ndarray
) -> np.ndarray:
    """G(z) d, without assembling G."""
    return SlantOperator(inst, z).matvec(d)


def apply_slant_transpose(
    inst: ProblemInstance, z: State | np.ndarray, w: np.ndarray
) -> np.ndarray:
    """G(z)^T w, without assembling G."""
    return SlantOperator(inst, z).rmatvec(w)


def assemble_slant(
    inst: ProblemInstance, z: State | np.ndarray
) -> sparse.csr_matrix:
    return SlantOperator(inst, z).assemble()


def merit(inst: ProblemInstance, z: State | np.ndarray) -> float:
    """Q(z) = ||F(z)||^2 / 2."""
    return residual(inst, z).merit


def merit_gradient(
    inst: ProblemInstance, z: State | np.ndarray
) -> np.ndarray:
    """grad Q(z) = G(z)^T F(z)."""
    return apply_slant_transpose(inst, z, residual(inst, z).vector)
