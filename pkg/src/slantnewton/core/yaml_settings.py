"""YAML configuration loading with include: directive support."""

from __future__ import annotations

import os
import sys
from pathlib import Path

import yaml
from platformdirs import user_config_dir
from pydantic_settings import BaseSettings, YamlConfigSettingsSource

from slantnewton.core.log import logger

CONFIG_FILENAME = "slantnewton.yaml"
DEFAULTS_FILE = Path(__file__).parent.parent / "defaults" / "default.yaml"


def cli_includes(argv: list[str] | None = None) -> list[str]:
    """Collect `--include FILE` values ahead of the CLI parser."""
    argv = sys.argv[1:] if argv is None else argv
    includes = []
    i = 0
    while i < len(argv):
        if argv[i] == "--include" and i + 1 < len(argv):
            includes.append(argv[i + 1])
            i += 1
        i += 1
    return includes


class YamlWithIncludesSettingsSource(YamlConfigSettingsSource):
    """YAML source layering defaults, user, project and --include files.

    Merge order (later wins): package defaults/default.yaml < user
    config dir < ./slantnewton.yaml < --include files. Each file may
    name further files under `include:`; they are resolved relative to
    the including file and merged beneath it.
    """

    def __init__(
        self, settings_cls: type[BaseSettings], yaml_file=None
    ):
        base = yaml_file or settings_cls.model_config.get("yaml_file")
        includes = cli_includes()
        if base and includes:
            yaml_file = (
                [base] if isinstance(base, str | os.PathLike) else list(base)
            ) + includes
        elif includes:
            yaml_file = includes
        else:
            yaml_file = base

        super().__init__(settings_cls, yaml_file)

    def _read_files(self, files, deep_merge: bool = False):
        files_to_load = [
            DEFAULTS_FILE,
            Path(user_config_dir("slantnewton", appauthor=False))
            / CONFIG_FILENAME,
        ]
        if files:
            if isinstance(files, str | os.PathLike):
                files = [files]
            files_to_load.extend(Path(f).expanduser() for f in files)

        result: dict = {}
        for file_path in files_to_load:
            if not file_path.is_file():
                logger.debug(
                    "Configuration file not found (skipping)",
                    file=str(file_path),
                )
                continue
            data = self._load_file_recursive(file_path, set())
            result = self._deep_merge(result, data)
        return result

    def _load_file_recursive(
        self, filepath: Path, visited: set[Path]
    ) -> dict:
        """Load one file with its include: chain merged beneath it.

        Raises:
            ValueError: on a circular include
            FileNotFoundError: when an included file is missing
        """
        filepath = filepath.resolve()
        if filepath in visited:
            raise ValueError(f"Circular include: {filepath}")
        visited.add(filepath)

        with open(filepath, encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}

        includes = data.pop("include", None) or []
        if isinstance(includes, str):
            includes = [includes]
        for inc in includes:
            inc_path = Path(inc)
            if not inc_path.is_absolute():
                inc_path = (filepath.parent / inc_path).resolve()
            logger.debug(
                "Including configuration file",
                included_from=str(filepath),
                include_file=str(inc_path),
            )
            inc_data = self._load_file_recursive(inc_path, visited.copy())
            data = self._deep_merge(inc_data, data)

        return data

    @classmethod
    def _deep_merge(cls, base: dict, override: dict) -> dict:
        """Merge override into a copy of base; override wins."""
        result = base.copy()
        for key, value in override.items():
            if isinstance(result.get(key), dict) and isinstance(value, dict):
                result[key] = cls._deep_merge(result[key], value)
            else:
                result[key] = value
        return result
