"""Command line: ``drboost run | verify | plot``.

Exit codes: 0 success, 1 verification failure, 2 config or argument error,
3 runtime error (including failed experiment cells).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..exceptions import ArgumentError, ConfigError

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _positive(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser():
    parser = _Parser(prog="drboost", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run an experiment config and write CSV (and SVG)")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--out", type=Path, help="output directory (default: the config's output.dir or '.')")
    run.add_argument("--parallel", type=_positive, default=1, help="worker threads (default 1)")

    ver = sub.add_parser("verify", help="run a check suite")
    ver.add_argument("--suite", default="core", choices=("core", "numeric", "experiments", "all"))

    plot = sub.add_parser("plot", help="render a results CSV as an SVG line plot")
    plot.add_argument("--csv", required=True, type=Path)
    plot.add_argument("--x", default="t")
    plot.add_argument("--y", default="f_value")
    plot.add_argument("--group", default="solver")
    plot.add_argument("--out", required=True, type=Path)
    return parser


def _cmd_run(args):
    from .config import load_config
    from .runner import run_experiment, write_outputs

    cfg = load_config(args.config)
    out = args.out or Path(cfg.output_dir or ".")
    result = run_experiment(cfg, parallel=args.parallel)
    paths = write_outputs(cfg, result, out)
    for kind, path in sorted(paths.items()):
        print(f"{kind}: {path}")
    cells = len(cfg.solvers) * len(cfg.repeats)
    print(f"{cells - len(result.failures)}/{cells} cells ok")
    for fail in result.failures:
        print(f"failed {fail['run_id']}: {fail['reason']}", file=sys.stderr)
    return EXIT_OK if result.ok else EXIT_RUNTIME


def _cmd_verify(args):
    from .verify import run_suite

    results = run_suite(args.suite, out=lambda line: print(line, flush=True))
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_VERIFY


def _cmd_plot(args):
    from .runner import read_csv
    from .svg import emit_svg

    try:
        rows = read_csv(args.csv)
    except OSError as err:
        raise ArgumentError(f"cannot read {args.csv}: {err}") from err
    except ValueError as err:
        raise ArgumentError(str(err)) from err
    emit_svg(rows, {"x": args.x, "y": args.y, "group_by": args.group}, args.out)
    print(f"svg: {args.out}")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "verify": _cmd_verify, "plot": _cmd_plot}[args.command]
    try:
        return handler(args)
    except (ConfigError, ArgumentError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as err:
        print(f"runtime error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
