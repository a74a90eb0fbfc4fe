"""Benchmark problems with known structure.

Both use infinite control bounds, so Phi is the identity on p/alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from slantnewton.discretization.grid import GridFunction, make_grid, sample
from slantnewton.model.problem import (
    CUBIC,
    CUBIC_PLUS_LINEAR,
    Bounds,
    ProblemInstance,
)

# Example 1's data hard-codes 1/alpha for this alpha.
EXAMPLE1_ALPHA = 1e-3

PI = math.pi


@dataclass
class ExampleCase:
    instance: ProblemInstance
    exact_control: GridFunction | None
    name: str


@dataclass(frozen=True)
class ControlError:
    l2: float
    linf: float
    l2_weighted: float


def _bump(x1, x2):
    return np.sin(PI * x1) * np.sin(PI * x2)


def example1_exact_control(x1, x2):
    """u* = sin(pi x1) sin(pi x2) exp(pi x1)."""
    return _bump(x1, x2) * np.exp(PI * x1)


def example1_source(x1, x2, formula="printed"):
    """f for example 1.

    "printed" carries a (pi^2 / 10^3) z term; "consistent" replaces it
    by z^3, which makes y* = z, p* = alpha u* an exact solution.
    """
    z = _bump(x1, x2)
    middle = z ** 3 if formula == "consistent" else (PI ** 2 / 1e3) * z
    return 2 * PI ** 2 * z + middle - z * np.exp(PI * x1)


def example1_target(x1, x2):
    """y_d for example 1."""
    z = _bump(x1, x2)
    e = np.exp(PI * x1)
    return (
        z
        + (PI ** 2 * z * e) / 1e3
        - (2 * PI ** 2 * np.cos(PI * x1) * np.sin(PI * x2) * e) / 1e3
        + (3 * z ** 3 * e) / 1e3
    )


def example2_target(x1, x2):
    """y_d = sin(2 pi x1) sin(2 pi x2) e^{2 x1} / 6."""
    return (
        np.sin(2 * PI * x1) * np.sin(2 * PI * x2) * np.exp(2 * x1) / 6.0
    )


def example1(
    n: int,
    alpha: float = EXAMPLE1_ALPHA,
    formula: Literal["printed", "consistent"] = "printed",
) -> ExampleCase:
    """S(y) = y^3, unbounded control, exact control z e^{pi x1}.

    The exact control is only attached for formula = "consistent" and
    alpha = 1e-3. The printed source term does not make it a solution.
    """
    if formula not in ("printed", "consistent"):
        raise ValueError(f"unknown example1 formula {formula!r}")
    grid = make_grid(n)
    instance = ProblemInstance(
        grid=grid,
        nonlinearity=CUBIC,
        bounds=Bounds(),
        alpha=alpha,
        f=sample(grid, lambda x1, x2: example1_source(x1, x2, formula)),
        yd=sample(grid, example1_target),
    )
    exact = (
        sample(grid, example1_exact_control)
        if formula == "consistent" and alpha == EXAMPLE1_ALPHA
        else None
    )
    return ExampleCase(instance, exact, "example1")


def example2(n: int, alpha: float = EXAMPLE1_ALPHA) -> ExampleCase:
    """S(y) = y^3 + y, f = 0, no closed-form solution."""
    grid = make_grid(n)
    instance = ProblemInstance(
        grid=grid,
        nonlinearity=CUBIC_PLUS_LINEAR,
        bounds=Bounds(),
        alpha=alpha,
        f=GridFunction.zeros(grid),
        yd=sample(grid, example2_target),
    )
    return ExampleCase(instance, None, "example2")


def control_error(
    u_num: GridFunction, u_exact: GridFunction
) -> ControlError:
    u_num.require_grid(u_exact.grid)
    diff = u_num.values - u_exact.values
    l2 = float(np.linalg.norm(diff))
    return ControlError(
        l2=l2,
        linf=float(np.max(np.abs(diff))) if diff.size else 0.0,
        l2_weighted=u_num.grid.h * l2,
    )


EXAMPLES = {"example1": example1, "example2": example2}
