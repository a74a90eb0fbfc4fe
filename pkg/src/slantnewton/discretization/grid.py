"""Uniform grid on the unit square and the five-point Laplacian.

Unknowns live on interior nodes only (homogeneous Dirichlet data is
eliminated). Interior node (i, j), 1 <= i, j <= m, sits at (i*h, j*h)
and is stored at linear index (j - 1) * m + (i - 1): x1 varies fastest.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy import sparse


@dataclass(frozen=True)
class Grid:
    """Uniform Cartesian grid with n subintervals per direction."""

    n: int

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n:
            raise ValueError(f"n must be an integer, got {self.n!r}")
        if self.n < 2:
            raise ValueError(
                f"n must be at least 2 to have interior nodes, got {self.n}"
            )

    @property
    def h(self) -> float:
        """Mesh width."""
        return 1.0 / self.n

    @property
    def m(self) -> int:
        """Interior nodes per direction."""
        return self.n - 1

    @property
    def size(self) -> int:
        """Number of interior nodes, m**2."""
        return self.m * self.m

    def index(self, i: int, j: int) -> int:
        """Linear index of interior node (i, j), both 1-based."""
        if not (1 <= i <= self.m and 1 <= j <= self.m):
            raise ValueError(f"({i}, {j}) is not an interior node")
        return (j - 1) * self.m + (i - 1)

    def node(self, k: int) -> tuple[int, int]:
        """Inverse of index()."""
        if not 0 <= k < self.size:
            raise ValueError(f"index {k} out of range [0, {self.size})")
        j, i = divmod(k, self.m)
        return i + 1, j + 1

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """x1 and x2 of every interior node, in storage order."""
        ticks = np.arange(1, self.n) * self.h
        x1, x2 = np.meshgrid(ticks, ticks, indexing="xy")
        return x1.ravel(), x2.ravel()


@dataclass
class GridFunction:
    """One real value per interior node of `grid`."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.size,):
            raise ValueError(
                f"expected {self.grid.size} values for n={self.grid.n}, "
                f"got shape {self.values.shape}"
            )

    @classmethod
    def zeros(cls, grid: Grid) -> GridFunction:
        return cls(grid, np.zeros(grid.size))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> GridFunction:
        return cls(grid, np.full(grid.size, float(value)))

    def as_array(self) -> np.ndarray:
        """Values as an (m, m) array, row j and column i."""
        return self.values.reshape(self.grid.m, self.grid.m)

    def require_grid(self, grid: Grid) -> None:
        if self.grid != grid:
            raise ValueError(
                f"grid mismatch: function on n={self.grid.n}, "
                f"expected n={grid.n}"
            )


def make_grid(n: int) -> Grid:
    """Grid with h = 1/n and m = n - 1 interior nodes per direction."""
    return Grid(n)


def sample(
    grid: Grid, phi: Callable[[np.ndarray, np.ndarray], np.ndarray]
) -> GridFunction:
    """Evaluate phi(x1, x2) at every interior node.

    phi is called once with coordinate arrays and must broadcast.
    """
    x1, x2 = grid.coordinates()
    values = np.broadcast_to(
        np.asarray(phi(x1, x2), dtype=float), x1.shape
    ).copy()
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise ValueError(
            f"non-finite sample at interior node {grid.node(bad)}"
        )
    return GridFunction(grid, values)


def neg_laplacian(grid: Grid, values: np.ndarray) -> np.ndarray:
    """-Delta_h applied to a raw vector of interior values."""
    v = values.reshape(grid.m, grid.m)
    padded = np.pad(v, 1)
    out = (
        4.0 * v
        - padded[1:-1, :-2]
        - padded[1:-1, 2:]
        - padded[:-2, 1:-1]
        - padded[2:, 1:-1]
    )
    return (out / (grid.h * grid.h)).ravel()


def apply_neg_laplacian(grid: Grid, v: GridFunction) -> GridFunction:
    """Matrix-free five-point -Delta_h with zero Dirichlet boundary."""
    v.require_grid(grid)
    return GridFunction(grid, neg_laplacian(grid, v.values))


def assemble_neg_laplacian(grid: Grid) -> sparse.csr_matrix:
    """-[(I kron J_h) + (J_h kron I)] as a sparse matrix.

    Only used as a reference for the matrix-free stencil and by the
    direct linear solver.
    """
    m = grid.m
    ones = np.ones(m)
    j_h = sparse.diags(
        [ones[:-1], -2.0 * ones, ones[:-1]], [-1, 0, 1], shape=(m, m)
    ) / (grid.h * grid.h)
    eye = sparse.identity(m)
    return (-(sparse.kron(eye, j_h) + sparse.kron(j_h, eye))).tocsr()


def h_weighted_norm(grid: Grid, values: np.ndarray) -> float:
    """Discrete L2 norm h * ||v||_2, for discretization errors."""
    return grid.h * float(np.linalg.norm(values))
