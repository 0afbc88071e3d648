#!/usr/bin/env python3
"""
mcmc_certify.py - command-line front end for mcmc-certify.

Subcommands:
    sample             run one chain and write its trajectory
    constants          optimized drift/minorization certificate
    ci                 confidence interval for the mean of a chain
    verify-inequality  Monte-Carlo check of the exponential inequality
    coupling-check     weak-dependence sum of the coupled AR(1) chains
    experiment         fig2 (three-sampler) | constants-table | aggregation studies

Exit codes: 0 success, 1 unexpected error, 2 configuration error,
3 numerical error, 4 a verification ran and failed.
"""
# ------------------------ Imports ------------------------
# Standard Library Imports
import argparse
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

# Local Application/Library-specific Imports
from errors import (
    EXIT_SUCCESS,
    EXIT_UNEXPECTED,
    CertifyError,
    PropertyCheckFailure,
)
from experiments import (
    FULL_SCALE,
    ExperimentConfig,
    ExperimentResult,
    constants_table,
    load_config,
    replication_study,
    run_ci,
    run_constants,
    run_coupling_check,
    run_sample,
    run_three_sampler_experiment,
    run_verify_inequality,
)
from reporting import (
    append_file,
    csv_text,
    log_error,
    log_message,
    set_log_file,
    set_log_level,
    to_json_text,
    write_file,
)
from samplers import Trajectory


# ------------------------ Output ------------------------
def trajectory_csv(traj: Trajectory) -> str:
    """CSV k,x,v,v_sq with the step counters as header comments."""
    rows = (
        (k + 1, float(x), float(v), float(v2))
        for k, (x, v, v2) in enumerate(
            zip(traj.states, traj.v_values, traj.v_sq_values)
        )
    )
    comments = {
        "kind": traj.kind.value,
        "total_inner_steps": traj.total_inner_steps,
        "regeneration_count": traj.regeneration_count,
    }
    return csv_text(["k", "x", "v", "v_sq"], rows, comments)


def trajectory_record(traj: Trajectory) -> Dict[str, Any]:
    """JSON form of a trajectory."""
    return {
        "kind": traj.kind.value,
        "total_inner_steps": traj.total_inner_steps,
        "regeneration_count": traj.regeneration_count,
        "states": traj.states.tolist(),
        "v": traj.v_values.tolist(),
        "v_sq": traj.v_sq_values.tolist(),
    }


def render(payload: Any, fmt: str) -> str:
    """Render a command result as CSV or JSON text."""
    if isinstance(payload, Trajectory):
        return trajectory_csv(payload) if fmt == "csv" else to_json_text(
            trajectory_record(payload)
        )
    if isinstance(payload, ExperimentResult):
        if fmt == "csv":
            return csv_text(
                payload.columns(),
                payload.rows(),
                {"schema": payload.schema, "kind": payload.kind},
            )
        return to_json_text(payload.to_dict())
    if fmt == "csv":
        scalars = {
            key: value for key, value in payload.items()
            if not isinstance(value, (list, dict))
        }
        return csv_text(list(scalars), [list(scalars.values())])
    return to_json_text(payload)


def emit(payload: Any, fmt: str, out: Optional[Path]) -> None:
    """Write the rendered result to `out`, or print it."""
    text = render(payload, fmt)
    if out is None:
        print(text, end="")
        return
    if write_file(out, text):
        log_message(f"Wrote {fmt} output to {out}")
    else:
        raise CertifyError(f"could not write {out}")


# ------------------------ Commands ------------------------
def cmd_sample(config: ExperimentConfig, args) -> Tuple[Any, Optional[bool]]:
    """Run one chain."""
    return run_sample(config), None


def cmd_constants(config: ExperimentConfig, args) -> Tuple[Any, Optional[bool]]:
    """Optimized certificate."""
    return run_constants(config), None


def cmd_ci(config: ExperimentConfig, args) -> Tuple[Any, Optional[bool]]:
    """Confidence interval."""
    return run_ci(config), None


def cmd_verify(config: ExperimentConfig, args) -> Tuple[Any, Optional[bool]]:
    """Exponential-inequality check."""
    record = run_verify_inequality(config, args.case)
    return record, record["passed"]


def cmd_coupling(config: ExperimentConfig, args) -> Tuple[Any, Optional[bool]]:
    """Weak-dependence sum check."""
    record = run_coupling_check(config)
    return record, record["passed"]


def cmd_experiment(config: ExperimentConfig, args) -> Tuple[Any, Optional[bool]]:
    """Experiment studies."""
    if args.study in ("fig2", "three-sampler"):
        return run_three_sampler_experiment(config), None
    if args.study == "constants-table":
        return constants_table(config), None
    return replication_study(config), None


COMMANDS = {
    "sample": cmd_sample,
    "constants": cmd_constants,
    "ci": cmd_ci,
    "verify-inequality": cmd_verify,
    "coupling-check": cmd_coupling,
    "experiment": cmd_experiment,
}

# argparse destination -> experiment field
OVERRIDES = {
    "seed": "seed",
    "kind": "chain",
    "chain": "chain",
    "n": "n",
    "reps": "reps",
    "budget": "budget",
    "workers": "workers",
    "x_dev": "x_dev",
    "y_tune": "y_tune",
    "lam": "lambda",
    "x": "x",
    "x_prime": "x_prime",
    "d": "d",
    "horizon": "horizon",
    "variant": "variant",
    "c_route": "c_route",
    "moves": "coupling_moves",
}


# ------------------------ Argument Parsing ------------------------
def build_parser() -> argparse.ArgumentParser:
    """Parser with the global flags repeated on every subcommand."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Path to experiment config (JSON)")
    common.add_argument("--seed", type=int, help="RNG seed")
    common.add_argument("--out", type=Path, help="Output file (stdout if omitted)")
    common.add_argument("--format", choices=["csv", "json"], help="Output format")
    common.add_argument(
        "--paper-scale",
        "--full-scale",
        dest="full_scale",
        action="store_true",
        help="Use 10^4 x 10^4 replications",
    )
    common.add_argument("--log-file", type=Path, help="Path to log file")
    common.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default="INFO",
        help="Logging level",
    )

    parser = argparse.ArgumentParser(
        description="Certified concentration bounds for MCMC estimates"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sample = sub.add_parser("sample", parents=[common], help="Run one chain")
    sample.add_argument("--kind", choices=["rwm", "regen", "reject", "ar1"])
    sample.add_argument("--n", type=int)

    constants = sub.add_parser("constants", parents=[common], help="Certificate")
    constants.add_argument("--chain", choices=["regen", "ar1"])
    constants.add_argument("--variant", choices=["eq4", "sec4", "standard", "doubled"])
    constants.add_argument(
        "--c-route", dest="c_route", choices=["eq_c", "floor", "pointwise"]
    )

    ci = sub.add_parser("ci", parents=[common], help="Confidence interval")
    ci.add_argument("--chain", choices=["regen", "ar1"])
    ci.add_argument("--n", type=int)
    ci.add_argument("--x", dest="x_dev", type=float, help="Deviation x > sqrt(2)")
    ci.add_argument("--y", dest="y_tune", type=float, help="Tuning y > 0")

    verify = sub.add_parser(
        "verify-inequality", parents=[common], help="Check the exponential inequality"
    )
    verify.add_argument("--case", choices=["iid", "ar1", "regen"], required=True)
    verify.add_argument("--lambda", dest="lam", type=float)
    verify.add_argument("--n", type=int)
    verify.add_argument("--reps", type=int)

    coupling = sub.add_parser(
        "coupling-check", parents=[common], help="Check the weak-dependence sum"
    )
    coupling.add_argument("--x", type=float)
    coupling.add_argument("--xp", dest="x_prime", type=float)
    coupling.add_argument("--d", type=float)
    coupling.add_argument("--horizon", type=int)
    coupling.add_argument("--reps", type=int)
    coupling.add_argument("--moves", choices=["independent", "synchronous"])

    experiment = sub.add_parser("experiment", parents=[common], help="Run a study")
    experiment.add_argument(
        "study", choices=["fig2", "three-sampler", "constants-table", "aggregation"]
    )
    experiment.add_argument("--chain", choices=["regen", "ar1"])
    experiment.add_argument("--n", type=int)
    experiment.add_argument("--reps", type=int)
    experiment.add_argument("--budget", type=int)
    experiment.add_argument("--workers", type=int)
    return parser


def collect_overrides(args) -> Dict[str, Any]:
    """Experiment fields set on the command line."""
    overrides = {}
    if args.full_scale:
        overrides.update(FULL_SCALE)
    for dest, key in OVERRIDES.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[key] = value
    return overrides


def main(argv=None) -> int:
    """Parse arguments, run the subcommand and return its exit code."""
    args = build_parser().parse_args(argv)
    set_log_level(args.log_level)

    try:
        if args.log_file:
            append_file(
                args.log_file,
                (
                    f"\n=== {args.command} session started at "
                    f"{datetime.now(timezone.utc).isoformat()} ===\n"
                ),
            )
        set_log_file(args.log_file)

        config = load_config(args.config).with_overrides(**collect_overrides(args))
        default_format = "csv" if args.command == "sample" else "json"
        fmt = args.format or config.output.get("format", default_format)
        out = args.out or (
            Path(config.output["path"]) if config.output.get("path") else None
        )

        payload, passed = COMMANDS[args.command](config, args)
        emit(payload, fmt, out)
        if passed is False:
            raise PropertyCheckFailure(f"{args.command} verification failed")
        return EXIT_SUCCESS

    except CertifyError as e:
        log_error(str(e))
        return e.exit_code
    except Exception as e:
        log_error(f"Unexpected error during {args.command}: {e}")
        return EXIT_UNEXPECTED
    finally:
        set_log_file(None)


if __name__ == "__main__":
    sys.exit(main())
