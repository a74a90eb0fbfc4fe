"""Solver configuration and application settings."""

from __future__ import annotations

import os
import re
from pathlib import Path
from typing import Any, Literal

import platformdirs
import yaml
from pydantic import BaseModel, Field, model_validator
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
)

from slantnewton.core.base import BaseConfig
from slantnewton.core.log import Logger
from slantnewton.core.yaml_settings import (
    CONFIG_FILENAME,
    YamlWithIncludesSettingsSource,
)

# Usage in YAML: {platformdirs.user_state_dir}, {os.getcwd}
TEMPLATE_NAMESPACE = {
    'os': os,
    'platformdirs': platformdirs,
    'Path': Path,
}

Variant = Literal["issng-l", "issng"]


# ============================================================
# SOLVER CONFIGURATION
# ============================================================

class KrylovConfig(BaseConfig):
    """Inner linear solver settings."""

    restart: int = Field(
        default=50,
        gt=0,
        description="GMRES restart length (Krylov basis dimension)",
    )
    max_iters: int | None = Field(
        default=None,
        gt=0,
        description=(
            "Cap on total operator applications per solve; "
            "None means 10 * dim"
        ),
    )
    initial_guess: Literal["zero", "previous"] = Field(
        default="zero",
        description=(
            "'zero' starts every Newton step from 0; 'previous' warm "
            "starts from the last Newton direction"
        ),
    )


class SolverConfig(BaseConfig):
    """Parameters of the semismooth Newton-GMRES iteration."""

    c1: float = Field(
        default=0.5,
        gt=0,
        description=(
            "Sufficient-decrease coefficient. Values >= 1 are accepted "
            "for experiments but fall outside the convergence theory"
        ),
    )
    theta: float = Field(
        default=0.5, gt=0, lt=1, description="Backtracking factor"
    )
    delta0: float = Field(
        default=1.0, gt=0, le=1, description="Initial stepsize"
    )
    eta0: float = Field(
        default=0.5, ge=0, lt=1, description="Forcing term at k = 0"
    )
    eta_max: float = Field(
        default=0.9, ge=0, lt=1, description="Upper clamp on forcing terms"
    )
    gamma: float = Field(
        default=0.9, ge=0, le=1, description="Forcing-term scale"
    )
    a1: float = Field(
        default=2.0, gt=1, le=2, description="Forcing-term exponent"
    )
    eta_min: float = Field(
        default=1e-10,
        ge=0,
        lt=1,
        description=(
            "Floor on the GMRES target; tighter targets are out of reach "
            "in double precision"
        ),
    )
    eta_safeguard: float = Field(
        default=1e-3,
        ge=0,
        description=(
            "Raise the GMRES target to eta_safeguard * tol * "
            "max(1, ||r_y^0|| + ||r_p^0||) / ||F(z_k)||; 0 disables"
        ),
    )
    forcing_history: Literal["literal", "all"] = Field(
        default="literal",
        description=(
            "'literal': max over ||F(z_j)||, 1 <= j <= k-1 (j = 0 "
            "admitted at k = 1); 'all': max over 0 <= j <= k-1"
        ),
    )
    tol: float = Field(
        default=1e-8, gt=0, description="Stopping tolerance on tau_k"
    )
    max_newton: int = Field(
        default=100, gt=0, description="Newton iteration cap"
    )
    max_backtracks: int = Field(
        default=50, gt=0, description="Stepsize reductions per iteration"
    )
    window: int | None = Field(
        default=None,
        gt=0,
        description=(
            "Nonmonotone memory: reference merit is the max of the last "
            "`window` merits; None uses the whole history"
        ),
    )
    variant: Variant = Field(
        default="issng-l",
        description=(
            "'issng-l' uses the nonmonotone line search; 'issng' takes "
            "full steps"
        ),
    )
    linear_solver: Literal["gmres", "direct"] = Field(
        default="gmres",
        description=(
            "'gmres' solves the Newton system matrix-free to the forcing "
            "tolerance; 'direct' factorizes the assembled slant matrix"
        ),
    )
    krylov: KrylovConfig = Field(default_factory=KrylovConfig)


PresetName = Literal["reproduction"]
PRESETS_DIR = Path(__file__).parent.parent / "defaults" / "presets"


def apply_preset(cfg: SolverConfig, name: str) -> SolverConfig:
    """cfg with the solver section of a packaged preset laid over it.

    Presets live in defaults/presets/<name>.yaml and are ordinary
    config files, so `--include` accepts them as well.

    Raises:
        ValueError: no preset of that name
    """
    path = PRESETS_DIR / f"{name}.yaml"
    if not path.is_file():
        raise ValueError(f"unknown solver preset {name!r}")
    with open(path) as f:
        data = yaml.safe_load(f) or {}
    overrides = data.get("config", {}).get("solver", {})
    merged = YamlWithIncludesSettingsSource._deep_merge(
        cfg.model_dump(), overrides
    )
    return SolverConfig.model_validate(merged)


# ============================================================
# APPLICATION CONFIGURATION
# ============================================================

class Config(BaseConfig):
    """Everything loaded from YAML/env/CLI."""

    logger: Logger = Field(
        default=None,
        description="Logger configuration and runtime instance",
    )
    solver: SolverConfig = Field(
        default_factory=SolverConfig,
        description="Newton-GMRES parameters",
    )
    log_root: Path = Field(
        default_factory=(
            lambda: Path(platformdirs.user_state_dir()) / "slantnewton"
        ),
        description=(
            "Root directory for log files "
            "(supports {platformdirs.*} templates)"
        ),
    )
    run_name: str = Field(
        default="issng",
        description="Name used for the log directory and service name",
    )

    @model_validator(mode='after')
    def _setup_logger(self) -> 'Config':
        """Install the global logger from this configuration."""
        from slantnewton.core.log import setup_logger

        if self.logger is None:
            self.logger = Logger()

        self.logger = setup_logger(
            log_root=self.log_root,
            run_name=self.run_name,
            level=self.logger.level,
            console=self.logger.console,
            otlp=self.logger.otlp,
            file=self.logger.file,
        )
        return self


# ============================================================
# SETTINGS (all sources combined)
# ============================================================

class Settings(BaseSettings):
    """Application settings: configuration plus include handling.

    Sources, highest priority first: constructor/CLI arguments,
    environment variables (SLANTNEWTON_CONFIG__SOLVER__C1=0.3), .env,
    YAML (defaults < user config < ./slantnewton.yaml < --include).
    """

    config: Config = Field(
        default_factory=Config,
        description="Application configuration (from YAML/env/CLI)",
    )
    include: list[str] | None = Field(
        default=None,
        description=(
            "Additional YAML files to include and merge. "
            "Use --include on the CLI or include: in YAML files."
        ),
    )

    model_config = SettingsConfigDict(
        yaml_file=CONFIG_FILENAME,
        env_file=".env",
        env_prefix="SLANTNEWTON_",
        env_nested_delimiter="__",
        cli_implicit_flags=True,
        cli_use_class_docs_for_groups=True,
        cli_exit_on_error=False,
        extra='ignore',
    )

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        """Priority: init > environment > .env > YAML > secrets."""
        return (
            init_settings,
            env_settings,
            dotenv_settings,
            YamlWithIncludesSettingsSource(settings_cls),
            file_secret_settings,
        )

    @model_validator(mode="after")
    def substitute_templates(self) -> "Settings":
        """Expand {config.*} and {platformdirs.*} in string fields."""
        self._substitute_recursive(self)
        return self

    def _substitute_recursive(self, obj: Any) -> None:
        if isinstance(obj, BaseModel):
            for field_name in obj.__class__.model_fields:
                value = getattr(obj, field_name)
                new_value = self._substitute_value(value)
                if new_value is not value:
                    setattr(obj, field_name, new_value)
        elif isinstance(obj, dict):
            for key in obj:
                obj[key] = self._substitute_value(obj[key])
        elif isinstance(obj, list):
            for i, item in enumerate(obj):
                obj[i] = self._substitute_value(item)

    def _substitute_value(self, value: Any) -> Any:
        if isinstance(value, str):
            return self.substitute_string(value)
        if isinstance(value, Path):
            return Path(self.substitute_string(str(value)))
        if isinstance(value, BaseModel | dict | list):
            self._substitute_recursive(value)
        return value

    def substitute_string(self, value: str) -> str:
        """Replace {dotted.path} templates with resolved values.

        Unknown paths are left untouched, so sink templates such as
        {log_root} survive until the sink formats them.

        Examples:
            "{platformdirs.user_state_dir}" -> "~/.local/state"
            "{config.run_name}.csv" -> "issng.csv"
        """
        def replace_template(match):
            parts = match.group(1).split(".")
            if parts[0] in TEMPLATE_NAMESPACE:
                obj = TEMPLATE_NAMESPACE[parts[0]]
                parts = parts[1:]
            else:
                obj = self
            try:
                for part in parts:
                    obj = getattr(obj, part)
                if callable(obj):
                    obj = (
                        obj("slantnewton", appauthor=False)
                        if getattr(obj, "__module__", "") == "platformdirs"
                        else obj()
                    )
                return str(obj)
            except (AttributeError, TypeError):
                return match.group(0)

        return re.sub(r'\{([a-z_]+(?:\.[a-z_]+)+)\}', replace_template, value)


__all__ = [
    "PRESETS_DIR",
    "Config",
    "KrylovConfig",
    "PresetName",
    "Settings",
    "SolverConfig",
    "Variant",
    "apply_preset",
]
