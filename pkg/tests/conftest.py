from __future__ import annotations

from pathlib import Path

import pytest

from xri_zones.defaults import default_lab_layout
from xri_zones.model import layout_from_json

REPO_ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture(scope="session")
def lab_layout():
    return default_lab_layout()


@pytest.fixture(scope="session")
def lab_layout_file(repo_root: Path):
    return layout_from_json((repo_root / "layouts" / "lab.json").read_text(encoding="utf-8"))


def scenario_path(name: str) -> Path:
    return REPO_ROOT / "scenarios" / name


def golden_path(name: str) -> Path:
    return REPO_ROOT / "goldens" / name
