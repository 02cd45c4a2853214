"""Shared fixtures; pyswimpose is imported lazily so that test_import.py still sees a fresh interpreter."""

from __future__ import annotations

from collections.abc import Iterator
from pathlib import Path

import pytest


@pytest.fixture()
def output_root(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Iterator[Path]:
    """Redirect the FolderManager output root into the temporary directory of a test."""
    from pyswimpose.FolderManager import FolderManager
    from pyswimpose.UserInterface import UIHandler

    root = tmp_path / "output"
    monkeypatch.setenv("PYSWIMPOSE_OUTPUT", str(root))
    FolderManager.reset_instance()
    yield root
    FolderManager.reset_instance()
    UIHandler.reset()
