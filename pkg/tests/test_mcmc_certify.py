#!/usr/bin/env python3
"""Test cases for the mcmc_certify.py command line."""

# Standard Library Imports
import json
from pathlib import Path
from unittest.mock import patch

# Local application/library imports
from errors import NumericalError
from mcmc_certify import build_parser, collect_overrides, main, render
from reporting import parse_csv_comments, set_log_file, set_log_level

# Third-party imports
import pytest

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(autouse=True)
def reset_logging():
    """Restore console logging after each command."""
    yield
    set_log_file(None)
    set_log_level("INFO")


# -------------- Output formats --------------
def test_sample_writes_csv_with_comments(tmp_path):
    """Test the trajectory CSV written by the sample command."""
    out = tmp_path / "traj.csv"
    code = main(
        ["sample", "--kind", "ar1", "--n", "5", "--seed", "3", "--out", str(out)]
    )
    assert code == 0
    content = out.read_text()
    comments = parse_csv_comments(content)
    assert comments["kind"] == "ar1"
    assert comments["total_inner_steps"] == "5"
    lines = [line for line in content.splitlines() if not line.startswith("#")]
    assert lines[0] == "k,x,v,v_sq"
    assert len(lines) == 6
    assert lines[1].startswith("1,")


def test_sample_json_format(tmp_path):
    """Test the JSON trajectory record."""
    out = tmp_path / "traj.json"
    code = main(
        ["sample", "--kind", "ar1", "--n", "4", "--format", "json", "--out", str(out)]
    )
    assert code == 0
    record = json.loads(out.read_text())
    assert record["kind"] == "ar1"
    assert len(record["states"]) == 4
    assert record["v_sq"][0] == pytest.approx(record["v"][0] ** 2)


def test_constants_prints_json(capsys):
    """Test that the constants record goes to stdout by default."""
    code = main(["constants", "--chain", "ar1", "--log-level", "ERROR"])
    assert code == 0
    record = json.loads(capsys.readouterr().out)
    assert 10.0 <= record["K_standard"] <= 100.0
    assert record["variant"] == "standard"


def test_render_dict_csv_keeps_scalars():
    """Test that nested values are dropped from single-row CSV output."""
    text = render({"a": 1.5, "b": [1, 2], "c": {"d": 1}, "e": True}, "csv")
    assert text == "a,e\n1.5,true\n"


def test_config_output_path(tmp_path):
    """Test that the config's output path is used when --out is absent."""
    out = tmp_path / "result.json"
    config = tmp_path / "config.json"
    config.write_text(
        json.dumps(
            {
                "experiment": {"chain": "ar1", "d": 2.0, "horizon": 50, "reps": 20},
                "output": {"path": str(out), "format": "json"},
            }
        )
    )
    code = main(["coupling-check", "--config", str(config), "--log-level", "ERROR"])
    assert code == 0
    assert json.loads(out.read_text())["passed"] is True


# -------------- Exit codes --------------
def test_bad_config_exits_with_two(tmp_path, capsys):
    """Test that an invalid configuration value returns 2 and names the field."""
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"experiment": {"x_dev": 1.0}}))
    assert main(["ci", "--config", str(config)]) == 2
    assert "experiment.x_dev" in capsys.readouterr().out


def test_bad_override_exits_with_two():
    """Test that a command-line value is validated like the config."""
    assert main(["coupling-check", "--d", "0.5", "--log-level", "ERROR"]) == 2


def test_failed_verification_exits_with_four(tmp_path):
    """Test that a completed check with passed=False returns 4 after writing."""
    out = tmp_path / "verify.json"
    with patch(
        "mcmc_certify.run_verify_inequality",
        return_value={"passed": False, "estimate": 1.2, "se": 0.01},
    ):
        code = main(["verify-inequality", "--case", "iid", "--out", str(out)])
    assert code == 4
    assert json.loads(out.read_text())["passed"] is False


def test_numerical_error_exits_with_three(mocker):
    """Test the numerical-failure exit code."""
    mocker.patch(
        "mcmc_certify.run_constants", side_effect=NumericalError("did not converge")
    )
    assert main(["constants"]) == 3


def test_unexpected_error_exits_with_one(mocker, capsys):
    """Test that an unexpected exception is logged and returns 1."""
    mocker.patch("mcmc_certify.run_ci", side_effect=RuntimeError("boom"))
    assert main(["ci"]) == 1
    assert "Unexpected error during ci: boom" in capsys.readouterr().out


def test_write_failure_is_an_error(mocker, tmp_path):
    """Test that an unwritable output file fails the command."""
    mocker.patch("mcmc_certify.write_file", return_value=False)
    out = tmp_path / "traj.csv"
    assert main(["sample", "--kind", "ar1", "--n", "3", "--out", str(out)]) == 1


def test_missing_subcommand_exits():
    """Test that a subcommand is required."""
    with pytest.raises(SystemExit):
        main([])


# -------------- Overrides and logging --------------
@pytest.mark.parametrize(
    "argv",
    [
        ["constants", "--config", "c.json", "--variant", "eq4", "--out", "k.json"],
        ["constants", "--config", "c.json", "--variant", "sec4", "--out", "k.json"],
        ["ci", "--config", "c.json", "--n", "500", "--x", "2.5", "--y", "0.1",
         "--seed", "3", "--out", "ci.json"],
        ["verify-inequality", "--case", "iid", "--lambda", "0.01", "--n", "20",
         "--reps", "1000", "--seed", "1"],
        ["sample", "--format", "csv", "--out", "t.csv"],
        ["coupling-check", "--seed", "2"],
        ["experiment", "fig2"],
        ["experiment", "constants-table", "--paper-scale"],
        ["experiment", "aggregation", "--format", "json"],
    ],
)
def test_documented_command_lines_parse(argv):
    """Test that every documented command line is accepted."""
    args = build_parser().parse_args(argv)
    assert args.command == argv[0]


def test_scale_flag_spellings_agree():
    """Test that both scale flags set the same overrides."""
    documented = build_parser().parse_args(["experiment", "fig2", "--paper-scale"])
    full = build_parser().parse_args(["experiment", "three-sampler", "--full-scale"])
    assert documented.full_scale and full.full_scale
    assert collect_overrides(documented) == collect_overrides(full)


@pytest.mark.parametrize(
    "variant, stored", [("eq4", "standard"), ("sec4", "doubled")]
)
def test_constants_variant_spellings(tmp_path, variant, stored):
    """Test the constants command with the eq4/sec4 variant names."""
    out = tmp_path / "constants.json"
    code = main(
        [
            "constants", "--config", str(CONFIG_DIR / "ar1_toy.json"),
            "--variant", variant, "--format", "json", "--out", str(out),
            "--log-level", "ERROR",
        ]
    )
    assert code == 0
    record = json.loads(out.read_text())
    assert record["variant"] == stored
    assert record["K_doubled"] > record["K_standard"]


def test_experiment_fig2_runs_three_samplers(tmp_path):
    """Test that the fig2 study name runs the three-sampler comparison."""
    out = tmp_path / "three.json"
    code = main(
        [
            "experiment", "fig2", "--reps", "2", "--budget", "100",
            "--format", "json", "--out", str(out), "--log-level", "ERROR",
        ]
    )
    assert code == 0
    record = json.loads(out.read_text())
    assert record["kind"] == "three-sampler"
    assert len(record["records"]) == 6


def test_full_scale_overrides():
    """Test that --full-scale sets the defaults and explicit flags win."""
    args = build_parser().parse_args(
        ["experiment", "three-sampler", "--full-scale", "--reps", "7"]
    )
    overrides = collect_overrides(args)
    assert overrides["reps"] == 7
    assert overrides["n"] == 10_000
    assert overrides["budget"] == 10_000


def test_override_names():
    """Test the mapping from flags to experiment fields."""
    args = build_parser().parse_args(
        ["verify-inequality", "--case", "ar1", "--lambda", "0.02", "--seed", "9"]
    )
    assert collect_overrides(args) == {"lambda": 0.02, "seed": 9}
    args = build_parser().parse_args(
        ["coupling-check", "--xp", "2", "--moves", "synchronous"]
    )
    assert collect_overrides(args) == {"x_prime": 2.0, "coupling_moves": "synchronous"}


def test_log_file_session_header(tmp_path):
    """Test the session header and the output message in the log file."""
    log = tmp_path / "certify.log"
    out = tmp_path / "constants.json"
    code = main(
        [
            "constants", "--chain", "ar1", "--log-file", str(log),
            "--log-level", "ERROR", "--out", str(out),
        ]
    )
    assert code == 0
    content = log.read_text()
    assert "=== constants session started at" in content
    assert f"Wrote json output to {out}" in content
