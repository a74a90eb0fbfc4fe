"""Pytest configuration and fixtures for slantnewton tests."""

import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

from slantnewton.core.log import ConsoleSink, setup_logger


@pytest.fixture(autouse=True, scope="session")
def configure_logging():
    """Console-only logging for the whole test session.

    Nothing is exported; debug output shows up with `pytest -s`.
    """
    test_log_root = Path(tempfile.gettempdir()) / "slantnewton-tests"
    setup_logger(
        log_root=test_log_root,
        run_name="test",
        console=ConsoleSink(level="debug"),
    )


@pytest.fixture
def rng():
    """Seeded generator so random oracles are reproducible."""
    return np.random.default_rng(20240517)


@pytest.fixture
def mock_argv():
    """Save and restore sys.argv."""
    original = sys.argv.copy()
    yield
    sys.argv = original


@pytest.fixture(scope="session")
def test_settings():
    """Settings from the defaults, ignoring pytest's argv."""
    from slantnewton.core.config import Settings

    old_argv = sys.argv
    sys.argv = ["slantnewton"]
    try:
        return Settings()
    finally:
        sys.argv = old_argv
