"""Problem selection shared by the run and sweep commands."""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator

from slantnewton.core.config import PresetName, SolverConfig, apply_preset
from slantnewton.model.examples import EXAMPLES, ExampleCase, example1
from slantnewton.model.problem import State
from slantnewton.report.problem_file import ProblemFile

if TYPE_CHECKING:
    from slantnewton.core.config import Settings


def parse_initial_guess(text: str) -> float:
    """Constant value of "zeros" (0) or "constant:<c>".

    Raises:
        ValueError: anything else
    """
    text = text.strip()
    if text == "zeros":
        return 0.0
    prefix, _, value = text.partition(":")
    if prefix == "constant" and value:
        try:
            return float(value)
        except ValueError:
            pass
    raise ValueError(
        f"initial guess must be 'zeros' or 'constant:<c>', got {text!r}"
    )


class ProblemOptions(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    example: Literal["example1", "example2"] | None = Field(
        default=None, description="Built-in benchmark problem"
    )
    file: Path | None = Field(
        default=None, description="JSON problem document"
    )
    alpha: float = Field(
        default=1e-3, gt=0, description="Control cost (examples only)"
    )
    init: str = Field(
        default="zeros",
        description="Initial y = p: 'zeros' or 'constant:<c>'",
    )
    formula: Literal["printed", "consistent"] = Field(
        default="printed",
        description=(
            "Source term of example1: 'printed' or 'consistent' "
            "(exact discrete-order checks)"
        ),
    )
    preset: PresetName | None = Field(
        default=None,
        description=(
            "Solver preset laid over config.solver; 'reproduction' "
            "is the forcing schedule of the benchmark tables"
        ),
    )

    @field_validator("init")
    @classmethod
    def _check_init(cls, value: str) -> str:
        parse_initial_guess(value)
        return value

    def build_case(self, n: int) -> ExampleCase:
        """Problem for grid size n.

        Raises:
            ValueError: invalid problem data
            OSError: unreadable problem file
            pydantic.ValidationError: malformed problem file
        """
        if self.file is not None:
            return ExampleCase(
                ProblemFile.load(self.file).to_instance(),
                None,
                str(self.file),
            )
        if self.example == "example1":
            return example1(n, self.alpha, self.formula)
        return EXAMPLES[self.example](n, self.alpha)

    def solver_config(self, settings: Settings) -> SolverConfig:
        cfg = settings.config.solver
        if self.preset is not None:
            cfg = apply_preset(cfg, self.preset)
        return cfg

    def initial_state(self, case: ExampleCase) -> State:
        return State.constant(
            case.instance.grid, parse_initial_guess(self.init)
        )
