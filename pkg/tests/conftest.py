"""Pytest configuration and fixtures for randworlds tests."""

from pathlib import Path

import pytest
from click.testing import CliRunner

from randworlds.logging_config import configure_logging
from randworlds.models import Conjunction, Query

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(autouse=True)
def _silence_logging():
    """Drop any sink a CLI test attached to the runner's captured stderr."""
    yield
    configure_logging()


@pytest.fixture
def data_dir() -> Path:
    """Directory holding the shipped .rwkb and JSON scenario inputs."""
    return DATA_DIR


@pytest.fixture
def cli_runner() -> CliRunner:
    """Create a Click CLI test runner with wide terminal for proper table display."""
    return CliRunner(env={"COLUMNS": "200"})


@pytest.fixture
def murderer_query() -> Query:
    return Query(constant="Jane", target=Conjunction.of("Murderer"))


@pytest.fixture
def copy_query() -> Query:
    return Query(constant="xd", target=Conjunction.of("Copy"))
