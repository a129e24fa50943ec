"""Command-line interface.

Four commands, all driven by a scenario file except ``summarize``:

  settlesim run <scenario>        execute per the scenario's mode
  settlesim gen <scenario>        materialize the workload instance only
  settlesim compare <scenario>    greedy versus exhaustive-oracle report
  settlesim summarize <trace>     recompute aggregates from an exported trace

Exit codes: 0 success, 2 for scenario/usage problems (diagnostic names the
file and field), 1 for runtime failures. All artifacts are a pure function
of (scenario file, overrides).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .network import DrainError, NetworkBuildError, NetworkValidationError, StepContractError
from .partition import InstanceTooLargeError, SystemValidationError
from .scenario import (
    Overrides,
    ScenarioError,
    compare_with_oracle,
    materialize_workload,
    run_scenario,
)
from .trace import import_trace, summarize

_USAGE_ERRORS = (ScenarioError,)
_RUNTIME_ERRORS = (
    NetworkBuildError,
    NetworkValidationError,
    StepContractError,
    DrainError,
    SystemValidationError,
    InstanceTooLargeError,
    ValueError,
    OSError,
)


def _add_override_flags(p: argparse.ArgumentParser, with_mode: bool = True) -> None:
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--t-end", type=int, default=None, dest="t_end", help="override the final tick")
    p.add_argument("--out", default=None, help="override the output parent directory")
    if with_mode:
        p.add_argument(
            "--mode", choices=("realtime", "batch", "both"), default=None, help="override the mode"
        )
    p.add_argument(
        "--format", choices=("ndjson", "csv"), default=None, dest="fmt", help="single trace export format"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="settlesim",
        description="Deterministic settlement simulator: timed-stream networks and batch partition optimization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario file")
    p_run.add_argument("scenario", help="path to the scenario JSON file")
    _add_override_flags(p_run)

    p_gen = sub.add_parser("gen", help="materialize the scenario's workload instance without running")
    p_gen.add_argument("scenario", help="path to the scenario JSON file")
    _add_override_flags(p_gen, with_mode=False)

    p_cmp = sub.add_parser("compare", help="compare greedy selection against the exhaustive oracle")
    p_cmp.add_argument("scenario", help="path to the scenario JSON file (instance of at most 20 elements)")
    _add_override_flags(p_cmp, with_mode=False)

    p_sum = sub.add_parser("summarize", help="summarize an exported trace file")
    p_sum.add_argument("trace", help="path to a trace.ndjson or trace.csv file")
    p_sum.add_argument(
        "--format", choices=("ndjson", "csv"), default=None, dest="fmt",
        help="trace format (default: from the file extension)",
    )
    return parser


def _overrides(args: argparse.Namespace) -> Overrides:
    return Overrides(
        seed=args.seed,
        t_end=args.t_end,
        out=args.out,
        mode=getattr(args, "mode", None),
        fmt=args.fmt,
    )


def _cmd_run(args: argparse.Namespace) -> int:
    outcome = run_scenario(args.scenario, _overrides(args))
    print(f"run dir: {outcome.run_dir}")
    if outcome.drained_count is not None:
        print(f"drained: {outcome.drained_count} elements")
    if outcome.summary_report is not None:
        s = outcome.summary_report
        print(f"trace: {s['payload_events']} payload / {s['hiaton_events']} hiaton events over {s['ticks']} ticks")
    if outcome.partition_report is not None:
        p = outcome.partition_report
        print(
            f"partition: accepted {p['accepted_count']}/{p['element_count']}, "
            f"aggregate {p['aggregate']}, violations {len(p['violations'])}"
        )
    return 0


def _cmd_gen(args: argparse.Namespace) -> int:
    outcome = materialize_workload(args.scenario, _overrides(args))
    print(f"run dir: {outcome.run_dir}")
    print(f"instance: {outcome.artifacts['instance.json']}")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    outcome = compare_with_oracle(args.scenario, _overrides(args))
    print(json.dumps(outcome.compare_report, sort_keys=True, indent=2))
    return 0


def _cmd_summarize(args: argparse.Namespace) -> int:
    path = Path(args.trace)
    fmt = args.fmt
    if fmt is None:
        suffix = path.suffix.lstrip(".")
        if suffix not in ("ndjson", "csv"):
            print(
                f"settlesim: cannot infer trace format from {path.name!r}; pass --format",
                file=sys.stderr,
            )
            return 2
        fmt = suffix
    trace = import_trace(path.read_bytes(), fmt)
    print(json.dumps(summarize(trace).to_jsonable(), sort_keys=True, indent=2))
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "gen": _cmd_gen,
    "compare": _cmd_compare,
    "summarize": _cmd_summarize,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _USAGE_ERRORS as err:
        print(f"settlesim: {err}", file=sys.stderr)
        return 2
    except _RUNTIME_ERRORS as err:
        print(f"settlesim: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
