"""Shared fixtures: repo data paths and loaded worlds/missions."""

import sys
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parent.parent

sys.path.insert(0, str(Path(__file__).resolve().parent))


@pytest.fixture(scope="session")
def worlds_dir() -> Path:
    return REPO / "worlds"


@pytest.fixture(scope="session")
def missions_dir() -> Path:
    return REPO / "missions"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return REPO / "fixtures"
