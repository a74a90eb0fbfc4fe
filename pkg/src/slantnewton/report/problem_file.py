"""JSON problem documents for `slantnewton run --file`.

    {
      "n": 32,
      "alpha": 0.001,
      "bounds": ["-inf", 2.5],
      "nonlinearity": "cubic",
      "f": "zero",
      "yd": [[...], ...]
    }

Grid values are either a flat list in storage order (x1 fastest) or
m rows of m values, row j holding the nodes with x2 = j*h.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from slantnewton.discretization.grid import GridFunction, make_grid
from slantnewton.model.problem import NONLINEARITIES, Bounds, ProblemInstance

GridValues = list[float] | list[list[float]]


def _parse_bound(value):
    if isinstance(value, str):
        text = value.strip().replace("−", "-").lower()
        if text in ("-inf", "inf", "+inf"):
            return float(text)
        raise ValueError(f"bound must be a number or +/-inf, got {value!r}")
    return value


class ProblemFile(BaseModel):
    """One discrete problem instance read from JSON."""

    model_config = ConfigDict(extra="forbid")

    n: int = Field(ge=2, description="Grid subintervals per direction")
    alpha: float = Field(gt=0, description="Control cost")
    bounds: tuple[float, float] = Field(
        default=(-math.inf, math.inf),
        description="Control box [lower, upper]; use \"-inf\"/\"inf\"",
    )
    nonlinearity: Literal["cubic", "cubic_plus_linear"] = "cubic"
    f: Literal["zero"] | GridValues = "zero"
    yd: GridValues

    @field_validator("bounds", mode="before")
    @classmethod
    def _bounds_from_strings(cls, value):
        if isinstance(value, list | tuple):
            return tuple(_parse_bound(v) for v in value)
        return value

    @classmethod
    def load(cls, path: Path) -> ProblemFile:
        """Parse and validate a problem document.

        Raises:
            OSError: file cannot be read
            pydantic.ValidationError: malformed document
        """
        return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))

    def to_instance(self) -> ProblemInstance:
        """Build the ProblemInstance.

        Raises:
            ValueError: grid values of the wrong size, invalid bounds
        """
        grid = make_grid(self.n)

        def grid_function(name: str, values) -> GridFunction:
            array = np.asarray(values, dtype=float).reshape(-1)
            if array.shape != (grid.size,):
                raise ValueError(
                    f"{name}: expected {grid.size} values for n={self.n}, "
                    f"got {array.size}"
                )
            if not np.all(np.isfinite(array)):
                raise ValueError(f"{name}: values must be finite")
            return GridFunction(grid, array)

        f = (
            GridFunction.zeros(grid)
            if self.f == "zero"
            else grid_function("f", self.f)
        )
        return ProblemInstance(
            grid=grid,
            nonlinearity=NONLINEARITIES[self.nonlinearity],
            bounds=Bounds(*self.bounds),
            alpha=self.alpha,
            f=f,
            yd=grid_function("yd", self.yd),
        )
