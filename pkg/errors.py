# errors.py
"""
Exception hierarchy. Every error knows the process exit code the CLI maps it to:
  2  configuration error
  3  data error (bad records, invalid parameters, degenerate geometry)
  4  statistical degeneracy (nothing to fit, ratio undefined)
"""

from __future__ import annotations

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DEGENERATE = 4


class WWCError(Exception):
    exit_code: int = EXIT_DATA


# ─────────────────── config ───────────────────
class ConfigError(WWCError, ValueError):
    exit_code = EXIT_CONFIG

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


# ─────────────────── data ───────────────────
class InvalidParameterError(WWCError, ValueError):
    exit_code = EXIT_DATA


class RecordError(WWCError, ValueError):
    exit_code = EXIT_DATA

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"record at line {line}: {message}" if line is not None else message)


class MalformedStreamError(WWCError, ValueError):
    exit_code = EXIT_DATA


class DegenerateVectorError(WWCError, ValueError):
    """PSC vector whose phase is undefined."""
    exit_code = EXIT_DATA


class DegenerateMeanError(WWCError, ValueError):
    """Circular mean of (near-)antipodal angles."""
    exit_code = EXIT_DATA


class NoMotionError(WWCError, ValueError):
    """Matched pair whose centroids did not move."""
    exit_code = EXIT_DATA


# ─────────────────── statistical degeneracy ───────────────────
class DegenerateSeriesError(WWCError, ValueError):
    exit_code = EXIT_DEGENERATE


class InsufficientDataError(WWCError, ValueError):
    exit_code = EXIT_DEGENERATE


class UndefinedRatioError(WWCError, ValueError):
    exit_code = EXIT_DEGENERATE
