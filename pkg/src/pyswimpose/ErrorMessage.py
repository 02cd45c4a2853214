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

"""Logging helpers and the exception types of pyswimpose."""

from __future__ import annotations

import linecache
import logging
import os
import traceback
from collections.abc import Callable
from time import localtime
from typing import Any

logger = logging.getLogger("pyswimpose")


class PoseError(Exception):
    """Base class of all errors raised deliberately by pyswimpose."""


class ConfigurationError(PoseError, ValueError):
    """A model, run or generator configuration is invalid or inconsistent."""


class DatasetError(PoseError, ValueError):
    """A dataset, manifest, annotation file or prediction set violates its format."""


class CheckpointError(PoseError, RuntimeError):
    """A checkpoint is missing, has an unknown format or does not fit the requested use."""


def _timestamp() -> str:
    year, month, day, hour, minute, sec = localtime()[:6]
    return "%s.%s.%s %02d:%02d:%02d" % (day, month, year, hour, minute, sec)  # noqa: UP031


def is_debug_mode() -> bool:
    """Return True if the environment variable PYSWIMPOSE_DEBUGMODE is set to 'True'."""
    return os.environ.get("PYSWIMPOSE_DEBUGMODE", "") == "True"


def format_traceback() -> str:
    """Format the exception that is currently handled, or return an empty string outside an except block.

    If a source file of the traceback cannot be decoded, e.g. because it is not UTF-8 encoded, its lines are
    left out so that the remaining details are still reported.
    """
    try:
        text = traceback.format_exc()
    except UnicodeDecodeError:
        original_updatecache: Callable[[str, dict[str, Any] | None], list[str]] = linecache.updatecache

        def updatecache_or_skip(filename: str, module_globals: dict[str, Any] | None = None) -> list[str]:
            try:
                return original_updatecache(filename, module_globals)
            except UnicodeDecodeError:
                return []

        linecache.updatecache = updatecache_or_skip  # type: ignore[assignment]
        try:
            text = traceback.format_exc()
        finally:
            linecache.updatecache = original_updatecache  # type: ignore[assignment]
    return "" if text.startswith("NoneType: None") else text


def error(*args: object) -> None:
    """Log arguments including the stacktrace of the exception that is currently handled.

    Args:
        *args: The arguments to log.
    """
    lines = ["-" * 60, f"Time: {_timestamp()}"]
    if len(args) > 0:
        lines.append("Message: " + " ".join(str(arg) for arg in args))
    stack = format_traceback().rstrip()
    if stack:
        lines += ["Traceback of the failed step:", stack]
    lines.append("-" * 60)
    logger.error("\n".join(lines))


def debug(*args: object, debugmode_only: bool = False) -> None:
    """Log arguments as debug information.

    Args:
        *args: The arguments to log.
        debugmode_only: True if the arguments shall be logged only when debug mode is on.
    """
    if (not debugmode_only or is_debug_mode()) and len(args) > 0:
        message = " ".join(str(arg) for arg in args)
        level = logging.DEBUG if debugmode_only else logging.INFO
        logger.log(level, f"Debug: {_timestamp()}\t{message}")


def debug_only(*args: object) -> None:
    """Log arguments if debug mode is on.

    Args:
        *args: The arguments to log.
    """
    debug(*args, debugmode_only=True)


def setup_console_logging() -> None:
    """Attach a console handler to the package logger, used by the command line entry points."""
    if any(getattr(handler, "_pyswimpose_console", False) for handler in logger.handlers):
        return
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter("%(message)s"))
    handler._pyswimpose_console = True  # type: ignore[attr-defined]  # noqa: SLF001
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if is_debug_mode() else logging.INFO)
