"""
curvlab 命令行

    curvlab list
    curvlab run <suite> [--bundle hopf] [--metric reference] [--t 0.1,1,10]
                        [--samples 8] [--seed 0] [--tol name=val ...]
                        [--out path] [--format json|csv] [--workers 1]
                        [--config file.toml] [-v | -q]
                        [--fd-step-first h1] [--fd-step-second h2]
                        [--rk4-steps-per-unit n] [--[no-]richardson]
                        [--[no-]proj-stabilize]

Exit codes: 0 pass, 1 fail, 2 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from curvlab.errors import ConfigError, CurvlabError
from curvlab.utils import setup_logging
from curvlab.verify.config import (FORMATS, load_config_file, merge_config,
                                   parse_tolerance)
from curvlab.verify.report import render_report
from curvlab.verify.suites import REGISTRY, list_suites, run_suite
from curvlab.version import version

logger = logging.getLogger(__name__)

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

NUMERICS_FLAGS = ("fd_step_first", "fd_step_second", "rk4_steps_per_unit", "richardson",
                  "proj_stabilize")


class _Parser(argparse.ArgumentParser):
    """参数错误走 ConfigError, 退出码 2"""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    """命令行参数"""
    parser = _Parser(prog="curvlab",
                     description="Numerical checks for Cheeger deformations "
                     "and O'Neill tensors on S3 principal bundles")
    parser.add_argument("--version", action="version", version=version())
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("list", help="list the suite registry")

    run = sub.add_parser("run", help="run one suite")
    run.add_argument("suite", help=f"one of: {', '.join(REGISTRY)}")
    run.add_argument("--bundle", help="hopf, trivial3x2 or trivial3x4")
    run.add_argument("--metric",
                     help="reference | cheeger(t) | regularized(t) | warped[(c)]")
    run.add_argument("--t", help="comma separated deformation times or durations")
    run.add_argument("--samples", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--tol",
                     action="append",
                     default=[],
                     metavar="NAME=VAL",
                     help="override one tolerance, repeatable")
    run.add_argument("--out", help="report path (default: stdout)")
    run.add_argument("--format", choices=FORMATS)
    run.add_argument("--workers", type=int)
    run.add_argument("--config", help="TOML file merged under the flags")
    numerics = run.add_argument_group("numerics", "override [numerics] keys")
    numerics.add_argument("--fd-step-first", type=float, metavar="H1")
    numerics.add_argument("--fd-step-second", type=float, metavar="H2")
    numerics.add_argument("--rk4-steps-per-unit", type=int, metavar="N")
    numerics.add_argument("--richardson", action=argparse.BooleanOptionalAction)
    numerics.add_argument("--proj-stabilize", action=argparse.BooleanOptionalAction)
    verbosity = run.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")
    return parser


def _run(args: argparse.Namespace) -> int:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    setup_logging(level)

    file_values = load_config_file(args.config) if args.config else {}
    cli_values = {
        "bundle": args.bundle,
        "metric": args.metric,
        "t": args.t,
        "samples": args.samples,
        "seed": args.seed,
        "workers": args.workers,
        "format": args.format,
        "out": args.out,
        "tol": dict(parse_tolerance(item) for item in args.tol) or None,
        "numerics": {
            key: getattr(args, key)
            for key in NUMERICS_FLAGS if getattr(args, key) is not None
        } or None,
    }
    config = merge_config(args.suite, file_values, cli_values)
    report = run_suite(args.suite, config)
    if not config.out:
        sys.stdout.write(render_report(report, config.format))
    return EXIT_PASS if report.passed else EXIT_FAIL


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    入口, 返回退出码
    """
    try:
        args = build_parser().parse_args(argv)
        if args.command == "list":
            for name, anchor in list_suites():
                sys.stdout.write(f"{name:28s} {anchor}\n")
            return EXIT_PASS
        return _run(args)
    except ConfigError as err:
        sys.stderr.write(f"curvlab: {err}\n")
        return EXIT_CONFIG
    except CurvlabError as err:
        logger.error("%s", err)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
