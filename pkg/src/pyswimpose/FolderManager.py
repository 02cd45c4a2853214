# The MIT License
#
# Copyright (c) 2024 pyswimpose developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy of
# this software and associated documentation files (the "Software"), to deal in
# the Software without restriction, including without limitation the rights to
# use, copy, modify, merge, publish, distribute, sublicense, and/or sell copies
# of the Software, and to permit persons to whom the Software is furnished to do
# so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.

from __future__ import annotations

import os
from pathlib import Path
from typing import Optional

from .ErrorMessage import debug, error

OUTPUT_ENVIRONMENT_VARIABLE = "PYSWIMPOSE_OUTPUT"
DEFAULT_OUTPUT_FOLDER = "pyswimpose_output"

_FoMa: Optional[FolderManager] = None


def default_output_root() -> Path:
    """The output root: $PYSWIMPOSE_OUTPUT if set, else ./pyswimpose_output."""
    root = os.environ.get(OUTPUT_ENVIRONMENT_VARIABLE, "")
    return Path(root) if root else Path.cwd() / DEFAULT_OUTPUT_FOLDER


def get_path(identifier: str) -> Path | bool:
    """Returns a path for a given identifier, such as 'DATASET', 'CHECKPOINTS', ..."""
    FoMa = getFoMa()
    if identifier in FoMa.folders:
        return FoMa.get_path(identifier)
    debug(f"FolderManager: Folder {identifier} unknown")
    return False


def set_path(identifier: str, path: str | Path) -> bool:
    """Sets a path for a given identifier, such as 'DATASET', 'CHECKPOINTS', ..."""
    FoMa = getFoMa()
    if identifier in FoMa.folders:
        FoMa.set_path(identifier, path)
        return True
    debug(f"FolderManager: Folder {identifier} unknown")
    return False


def get_file(identifier: str) -> Path | bool:
    FoMa = getFoMa()
    if identifier in FoMa.files:
        return FoMa.get_file(identifier)
    debug(f"FolderManager: File {identifier} unknown")
    return False


class FolderManagerInstance:
    """Resolves the folders and files a run writes to, relative to one output root."""

    def __init__(self, root: str | Path | None = None) -> None:
        # this ensures that the FolderManager can be called multiple times without performing __init__ every time
        if not hasattr(self, "_is_init_complete"):
            self._is_init_complete = True
            self.set_root(root if root is not None else default_output_root())

    def set_root(self, root: str | Path) -> None:
        """Redefine all folders and files below a new output root."""
        self.root = Path(root)
        self.folders: dict[str, Path] = {
            "OUTPUT": self.root,  # output root
            "DATASET": self.root / "dataset",  # synthesized dataset with manifest.json
            "CHECKPOINTS": self.root / "checkpoints",  # model archives and their loss logs
            "REPORTS": self.root / "reports",  # PCK reports, tables and curves
            "PLOTS": self.root / "plots",  # figures of the plot command
            "PREDICTIONS": self.root / "predictions",  # per-frame predictions and overlays
        }
        self.files: dict[str, Path] = {
            "LOGBOOK": self.root / "logbook.txt",  # timestamped run history
        }

    def get_path(self, identifier: str) -> Path:
        """Return the folder of an identifier and create it on first access."""
        if identifier not in self.folders:
            msg = f"FolderManager: Folder {identifier} unknown"
            raise KeyError(msg)
        folder = self.folders[identifier]
        if not folder.exists():
            try:
                folder.mkdir(parents=True, exist_ok=True)
            except OSError:
                error(f"FolderManager: Cannot create folder {folder}")
        return folder

    def set_path(self, identifier: str, path: str | Path) -> None:
        if identifier in self.folders:
            self.folders[identifier] = Path(path)
        else:
            debug(f"FolderManager: identifier '{identifier}' unknown to set path")

    def get_file(self, identifier: str) -> Path:
        if identifier not in self.files:
            msg = f"FolderManager: File {identifier} unknown"
            raise KeyError(msg)
        self.files[identifier].parent.mkdir(parents=True, exist_ok=True)
        return self.files[identifier]


# Singleton Wrapper around the FolderManager, as one usually only wants to use one instance of the FolderManager
# throughout the whole application.
class FolderManager(FolderManagerInstance):
    _instance: Optional[FolderManager] = None

    def __new__(cls, *args: object, **kwargs: object) -> FolderManager:  # noqa: ARG003
        # this ensures that the FolderManager can be called multiple times without creating a new instance
        if not isinstance(cls._instance, cls):
            cls._instance = super().__new__(cls)

        return cls._instance

    @classmethod
    def has_instance(cls) -> bool:
        return cls._instance is not None

    @classmethod
    def reset_instance(cls) -> None:
        """Forget the singleton, e.g. after the output root environment variable changed."""
        global _FoMa  # noqa: PLW0603
        cls._instance = None
        _FoMa = None


# The FolderManager is required within pyswimpose itself, but we do not want to initialize it already when
# importing, but only when it is used.
def getFoMa() -> FolderManager:  # noqa: N802
    global _FoMa  # noqa: PLW0603
    if _FoMa is None:
        _FoMa = FolderManager()
    return _FoMa
