#!/usr/bin/env python3
"""Test cases for reporting.py logging, file helpers and result writers."""

# Standard Library Imports
import json
from unittest.mock import patch

# Local application/library imports
from reporting import (
    LogLevel,
    append_file,
    csv_text,
    ensure_dir,
    format_number,
    get_log_level,
    log_debug,
    log_error,
    log_message,
    log_warning,
    parse_csv_comments,
    read_file,
    set_log_file,
    set_log_level,
    to_json_text,
    write_csv,
    write_file,
    write_json,
)

# Third-party imports
import pytest


@pytest.fixture(autouse=True)
def reset_logging():
    """Restore the default log settings after each test."""
    yield
    set_log_file(None)
    set_log_level("INFO")


def test_set_log_level():
    """Test setting the global log level."""
    set_log_level("DEBUG")
    assert get_log_level() is LogLevel.DEBUG
    assert log_message("Test", "DEBUG") is None
    set_log_level("ERROR")
    with patch("builtins.print") as mock_print:
        log_message("Test", "INFO")
        mock_print.assert_not_called()
    with pytest.raises(ValueError):
        set_log_level("INVALID")


def test_log_message(tmp_path, capsys):
    """Test logging to console and file."""
    log_file = tmp_path / "test.log"
    set_log_file(log_file)
    set_log_level("INFO")
    log_message("Test message", "INFO")
    captured = capsys.readouterr()
    assert captured.out.startswith("[INFO] ")
    assert "Test message" in captured.out
    assert log_file.read_text().endswith("Test message\n")


def test_log_below_threshold_still_reaches_file(tmp_path, capsys):
    """Test that filtered console messages are still written to the log file."""
    log_file = tmp_path / "debug.log"
    set_log_file(log_file)
    set_log_level("INFO")
    log_debug("quiet detail")
    assert capsys.readouterr().out == ""
    assert "[DEBUG]" in log_file.read_text()


def test_log_error_and_warning(tmp_path, capsys):
    """Test error and warning logging."""
    log_file = tmp_path / "error.log"
    set_log_file(log_file)
    set_log_level("WARNING")
    log_warning("Warning message")
    log_error("Error message")
    captured = capsys.readouterr()
    assert "[WARNING]" in captured.out
    assert "[ERROR]" in captured.out
    assert log_file.read_text().endswith("Error message\n")


def test_ensure_dir(tmp_path):
    """Test directory creation."""
    new_dir = tmp_path / "new" / "subdir"
    ensure_dir(new_dir)
    assert new_dir.is_dir()


def test_read_file(tmp_path):
    """Test reading file content."""
    file_path = tmp_path / "test.txt"
    file_path.write_text("Content", encoding="utf-8")
    assert read_file(file_path) == "Content"
    assert read_file(tmp_path / "nonexistent.txt") == ""


def test_write_file(tmp_path):
    """Test writing to a file."""
    file_path = tmp_path / "new" / "test.txt"
    assert write_file(file_path, "Content")
    assert file_path.read_text(encoding="utf-8") == "Content"
    with patch("reporting.Path.open", side_effect=OSError("Error")):
        assert not write_file(file_path, "Content")


def test_append_file(tmp_path):
    """Test appending content to a file."""
    file_path = tmp_path / "test.txt"
    content = "Test content\n"
    assert append_file(file_path, content)
    assert append_file(file_path, content)
    assert file_path.read_text(encoding="utf-8") == content + content


def test_append_file_failure_prints(tmp_path, capsys):
    """Test that append failures are printed, not logged."""
    with patch("reporting.Path.open", side_effect=OSError("disk full")):
        assert not append_file(tmp_path / "x.log", "line\n")
    assert "disk full" in capsys.readouterr().out


def test_format_number():
    """Test CSV cell formatting."""
    assert format_number(0.1) == "0.1"
    assert float(format_number(1 / 3)) == 1 / 3
    assert format_number(True) == "true"
    assert format_number(None) == ""
    assert format_number(7) == "7"


def test_csv_text_with_comments():
    """Test CSV text with header comments."""
    text = csv_text(["k", "x"], [(1, 0.5), (2, -1.25)], {"total_inner_steps": 9})
    assert text.splitlines() == [
        "# total_inner_steps=9",
        "k,x",
        "1,0.5",
        "2,-1.25",
    ]
    assert parse_csv_comments(text) == {"total_inner_steps": "9"}


def test_write_csv_and_json(tmp_path):
    """Test the file writers."""
    csv_path = tmp_path / "out" / "rows.csv"
    assert write_csv(csv_path, ["a"], [[1.5]])
    assert csv_path.read_text(encoding="utf-8") == "a\n1.5\n"

    json_path = tmp_path / "out" / "record.json"
    record = {"K_standard": 36.25, "valid": True}
    assert write_json(json_path, record)
    assert json.loads(json_path.read_text(encoding="utf-8")) == record
    assert to_json_text(record).endswith("\n")
