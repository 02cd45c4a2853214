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

import time
from pathlib import Path
from typing import Callable

from .ErrorMessage import debug
from .FolderManager import getFoMa


class UIHandler:
    """Routes status messages and training progress to the front end in use.

    The command line leaves the defaults in place, which write to the pyswimpose logger. Notebooks or other front ends
    register their own functions, e.g. to drive a progress bar.
    """

    _message_info: Callable[[str], None] | None = None
    _progress: Callable[[str, int, int, float], None] | None = None

    @classmethod
    def register_message_info(cls, handler: Callable[[str], None]) -> None:
        cls._message_info = handler

    @classmethod
    def message_info(cls, msg: str) -> None:
        """Report a status message, e.g. the size of a training set or where a report was written."""
        if cls._message_info is not None:
            cls._message_info(msg)
        else:
            debug("Info:", msg)

    @classmethod
    def register_progress(cls, handler: Callable[[str, int, int, float], None]) -> None:
        cls._progress = handler

    @classmethod
    def progress(cls, task: str, step: int, total: int, value: float) -> None:
        """Report step `step` of `total` of a training loop together with its latest loss."""
        if cls._progress is not None:
            cls._progress(task, step, total, value)
        else:
            debug(f"{task}: {step}/{total} loss={value:.6f}")

    @classmethod
    def reset(cls) -> None:
        """Remove all registered handlers."""
        cls._message_info = None
        cls._progress = None


message_info = UIHandler.message_info
progress = UIHandler.progress


def message_log(msg: str, logfilepath: str | Path | None = None) -> None:
    """Append a timestamped line to the logbook of the run."""
    if not logfilepath:
        logfilepath = getFoMa().get_file("LOGBOOK")

    with Path(logfilepath).open("a", encoding="utf-8") as logfile:
        year, month, day, hour, minute, sec = time.localtime()[:6]
        stamp = "%02d/%02d/%04d %02d:%02d:%02d" % (day, month, year, hour, minute, sec)  # noqa: UP031
        logfile.write(stamp + " - " + str(msg) + "\n")
