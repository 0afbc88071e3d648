"""
reporting.py - console/file logging and result writers for mcmc-certify.

Logging keeps a console threshold and an optional log file that receives
every message. File helpers never raise: they log the failure and return
False (or an empty string when reading).
"""
# ------------------------ Imports ------------------------
# Standard Library Imports
import json
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence


# ------------------------ Constants ------------------------
class LogLevel(Enum):
    """Log levels for console output."""

    DEBUG = 1
    INFO = 2
    WARNING = 3
    ERROR = 4


# ------------------------ Global Variables ------------------------
_log_file = None
_log_level = LogLevel.INFO  # Default log level for console


# ------------------------ Logging Functions ------------------------
def set_log_file(log_file: Optional[Path]) -> None:
    """Set the global log file; None disables file logging."""
    global _log_file
    _log_file = log_file


def set_log_level(level: str) -> None:
    """Set the global log level for console output."""
    global _log_level
    try:
        _log_level = LogLevel[level.upper()]
    except KeyError:
        raise ValueError(
            f"Invalid log level: {level}. Choose from DEBUG, INFO, WARNING, ERROR."
        )


def get_log_level() -> LogLevel:
    """Return the current console log level."""
    return _log_level


def log_message(message: str, level: str = "INFO") -> None:
    """Log message to console (if level >= _log_level) and log file (if set)."""
    timestamp = datetime.now(timezone.utc).isoformat()
    formatted_message = f"[{level}] {timestamp} {message}"

    try:
        message_level = LogLevel[level.upper()]
        if message_level.value >= _log_level.value:
            print(formatted_message)
    except KeyError:
        print(formatted_message)

    if _log_file:
        try:
            append_file(_log_file, formatted_message + "\n")
        except Exception:
            pass


def log_error(message: str) -> None:
    """Log error message."""
    log_message(message, "ERROR")


def log_warning(message: str) -> None:
    """Log warning message."""
    log_message(message, "WARNING")


def log_debug(message: str) -> None:
    """Log debug message."""
    log_message(message, "DEBUG")


# ------------------------ File Helpers ------------------------
def ensure_dir(path: Path) -> None:
    """Create directory if it doesn't exist."""
    path.mkdir(parents=True, exist_ok=True)


def read_file(path: Path) -> str:
    """Read file content, returning '' on failure."""
    try:
        with path.open(encoding="utf-8") as f:
            return f.read()
    except (IOError, OSError) as e:
        log_error(f"Could not read file {path}: {e}")
        return ""


def write_file(path: Path, content: str) -> bool:
    """Write content to file, creating parent directories if needed."""
    try:
        ensure_dir(path.parent)
        with path.open("w", encoding="utf-8") as f:
            f.write(content)
        return True
    except (IOError, OSError) as e:
        log_error(f"Could not write file {path}: {e}")
        return False


def append_file(path: Path, content: str) -> bool:
    """Append content to file, creating parent directories if needed."""
    try:
        ensure_dir(path.parent)
        with path.open("a", encoding="utf-8") as f:
            f.write(content)
        return True
    except (IOError, OSError) as e:
        # Printing here instead of log_error avoids recursing into the log file.
        print(f"[ERROR] Could not append to file {path}: {e}")
        return False


# ------------------------ Result Writers ------------------------
def format_number(value: Any) -> str:
    """Format a CSV cell; floats use the shortest round-trip representation."""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def to_json_text(record: Dict[str, Any]) -> str:
    """Serialize a record as indented JSON with round-trip floats."""
    return json.dumps(record, indent=2, sort_keys=False, allow_nan=True) + "\n"


def write_json(path: Path, record: Dict[str, Any]) -> bool:
    """Write a JSON record to path."""
    return write_file(path, to_json_text(record))


def csv_text(
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    comments: Optional[Dict[str, Any]] = None,
) -> str:
    """Build CSV text with optional leading '# key=value' comment lines."""
    lines: List[str] = []
    for key, value in (comments or {}).items():
        lines.append(f"# {key}={format_number(value)}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(format_number(cell) for cell in row))
    return "\n".join(lines) + "\n"


def write_csv(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    comments: Optional[Dict[str, Any]] = None,
) -> bool:
    """Write CSV rows (with optional comment header) to path."""
    return write_file(path, csv_text(columns, rows, comments))


def parse_csv_comments(content: str) -> Dict[str, str]:
    """Return the '# key=value' header comments of a CSV document."""
    comments = {}
    for line in content.splitlines():
        if not line.startswith("#"):
            break
        key, _, value = line[1:].strip().partition("=")
        comments[key.strip()] = value.strip()
    return comments
