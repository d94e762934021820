"""Command line entry point: ``python -m pn2sc <command> ...``.

Exit codes: 0 success, 1 usage error, 2 bad input data, 3 engine failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .bench import NotReducible, generate_sp, run_bench
from .engine import FiringLimitExceeded, StaleMatch
from .formats import ParseError, format_net, load_models, serialize_outputs, write_models
from .propagation import LabelExists, UnknownLabel, open_session, parse_change_script, propagate
from .transform import InvariantViolation, transform

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_ENGINE = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _sizes(text: str) -> list[int]:
    try:
        sizes = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}")
    if not sizes or any(n < 0 for n in sizes):
        raise argparse.ArgumentTypeError("sizes must be non-negative integers")
    return sizes


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pn2sc", description="Petri net to statechart transformation toolchain")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("transform", help="transform a net file into statechart outputs")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--matcher", choices=("incremental", "reference"), default="incremental")
    p.add_argument("--max-firings", type=int, default=None)
    p.add_argument("--trace", action="store_true", help="print one FIRE line per rule firing")

    p = sub.add_parser("generate", help="write a series-parallel benchmark net")
    p.add_argument("--sp", type=int, required=True, metavar="N")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("bench", help="time transformations of generated nets")
    p.add_argument("--sizes", type=_sizes, required=True)
    p.add_argument("--csv", required=True)
    p.add_argument("--matcher", choices=("incremental", "reference"), default="incremental")

    p = sub.add_parser("propagate", help="apply a change script to transformed outputs")
    p.add_argument("indir")
    p.add_argument("script")
    p.add_argument("--snapshot-dir", default=None)
    p.add_argument("-o", "--output", default=None, help="where to write updated models (default: indir)")
    p.add_argument("--trace", action="store_true")
    return parser


def _transform(args) -> int:
    result = transform(
        Path(args.input).read_text(),
        matcher=args.matcher,
        max_firings=args.max_firings,
        trace=sys.stderr if args.trace else None,
    )
    serialize_outputs(result, args.output)
    status = "reducible" if result.reducible else f"not reducible ({len(result.top_elements)} top elements)"
    print(f"{result.log.count} firings, {status}, read {result.read_seconds:.3f}s, transform {result.transform_seconds:.3f}s")
    return EXIT_OK


def _generate(args) -> int:
    if args.sp < 0:
        raise _UsageError("--sp must be non-negative")
    Path(args.output).write_text(format_net(generate_sp(args.sp)))
    return EXIT_OK


def _bench(args) -> int:
    for record in run_bench(args.sizes, args.matcher, args.csv):
        print(",".join(record.row()))
    return EXIT_OK


def _propagate(args) -> int:
    models = load_models(args.indir)
    commands = parse_change_script(Path(args.script).read_text())
    session = open_session(models, snapshot_dir=args.snapshot_dir)
    log = propagate(session, commands, trace=sys.stderr if args.trace else None)
    write_models(session.store, session.root, args.output or args.indir)
    print(f"{len(commands)} commands, {log.count} firings")
    return EXIT_OK


_COMMANDS = {"transform": _transform, "generate": _generate, "bench": _bench, "propagate": _propagate}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, UnknownLabel, LabelExists, OSError) as exc:
        print(f"pn2sc: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FiringLimitExceeded, StaleMatch, InvariantViolation, NotReducible) as exc:
        print(f"pn2sc: {exc}", file=sys.stderr)
        return EXIT_ENGINE


def cli(argv: Optional[Sequence[str]] = None) -> int:
    return main(argv)
