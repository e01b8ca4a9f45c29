"""Command-line front end.

Exit codes: 0 success, 1 data or file error, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from .engine import SimulationError, run_simulation
from .metrics import compute_metrics
from .scenario import ScenarioError, load_scenario
from .trace import first_divergence, read_trace

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2


def _u64(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits: {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gcrs", description="Global cognitive radio simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario")

    p = sub.add_parser("run", help="simulate a scenario")
    p.add_argument("scenario")
    p.add_argument("--seed", type=_u64, help="override the scenario's global seed")
    p.add_argument("--out-trace", metavar="PATH", help="write the JSON Lines trace here")
    p.add_argument("--out-metrics", metavar="PATH", help="write the JSON metrics report here")
    p.add_argument("--format", choices=("json", "table"), default="table")

    p = sub.add_parser("metrics", help="recompute metrics from a saved trace")
    p.add_argument("scenario")
    p.add_argument("trace")
    p.add_argument("--out-metrics", metavar="PATH")
    p.add_argument("--format", choices=("json", "table"), default="table")

    p = sub.add_parser("diff-trace", help="compare two traces line by line")
    p.add_argument("trace_a")
    p.add_argument("trace_b")
    return parser


def _emit(report, fmt: str, out_path: Optional[str]) -> None:
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(report.to_json())
    sys.stdout.write(report.to_json() if fmt == "json" else report.table())


def _report_errors(exc: ScenarioError) -> None:
    for path, msg in exc.errors:
        print(f"{path}: {msg}", file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            load_scenario(args.scenario)
            print(f"{args.scenario}: ok")
            return EXIT_OK

        if args.command == "run":
            config = load_scenario(args.scenario)
            trace, report = run_simulation(config, seed=args.seed)
            if args.out_trace:
                trace.write(args.out_trace)
            _emit(report, args.format, args.out_metrics)
            return EXIT_OK

        if args.command == "metrics":
            config = load_scenario(args.scenario)
            trace = read_trace(args.trace)
            _emit(compute_metrics(trace, config), args.format, args.out_metrics)
            return EXIT_OK

        with open(args.trace_a) as fa, open(args.trace_b) as fb:
            diff = first_divergence(fa.read().splitlines(), fb.read().splitlines())
        if diff is None:
            return EXIT_OK
        line, a, b = diff
        print(f"traces differ at line {line}")
        print(f"< {a if a is not None else '<end of file>'}")
        print(f"> {b if b is not None else '<end of file>'}")
        return EXIT_DATA
    except ScenarioError as exc:
        _report_errors(exc)
        return EXIT_DATA
    except OSError as exc:
        print(f"{exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
