"""Command-line interface.

    python run.py verify --example ex2-explicit
    python run.py verify --example ex0-family --param n=3
    python run.py solve --example ex1-implicit --set k=1 --grid -0.1,0.1,-1.8,-1.6,11,11
    python run.py geodesic --example ex9-explicit --state 0,0,1,0.5
    python run.py criterion --config my-metric.json
    python run.py list

Exit codes: 0 success, 1 a check failed, 2 configuration error.
"""
import argparse
import logging
import sys
from typing import List, Optional

from src.core.errors import (
    ConfigError,
    ExpressionSyntaxError,
    GridError,
    IntegrabilityError,
    UnknownExampleError,
)
from src.data.stats_export import Exporter

from ._cli_helpers import parse_assignments, parse_grid, parse_state
from .simulation import COMMANDS, EXIT_CONFIG, EXIT_FAILED, RunConfig, Simulation

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"

_CONFIG_ERRORS = (ConfigError, UnknownExampleError, ExpressionSyntaxError, GridError)


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.ERROR if quiet else logging.WARNING
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(level)


def _add_common(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--example", help="built-in example id (see 'list')")
    source.add_argument("--config", dest="config_path", help="JSON config file")
    parser.add_argument("--set", dest="constants", action="append", default=[], metavar="NAME=VALUE",
                        help="override a constant of the example (repeatable)")
    parser.add_argument("--param", dest="params", action="append", default=[], metavar="NAME=VALUE",
                        help="family parameter, e.g. n=3 (repeatable)")
    parser.add_argument("--preset", help="named preset of the example")
    parser.add_argument("--out", default="out", help="output directory (default: out)")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed for sample points (default: 0)")
    parser.add_argument("--tol", type=float, default=1e-10, help="integrator tolerance (default: 1e-10)")
    parser.add_argument("--samples", type=int, default=1000, help="bracket check points (default: 1000)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="run.py",
        description="Verify polynomial first integrals of geodesic flows on surfaces.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="only log errors")
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="bracket, curvature and criterion checks (anchor and PDE checks "
                                           "for implicit examples)")
    _add_common(verify)
    verify.add_argument("--threshold", type=float, default=1e-8, help="criterion threshold (default: 1e-8)")

    solve = sub.add_parser("solve", help="solve an implicit example on a grid")
    _add_common(solve)
    solve.add_argument("--grid", type=parse_grid, help="t0,t1,x0,x1,nt,nx")
    solve.add_argument("--newton-tol", type=float, default=1e-11, help="Newton residual tolerance (default: 1e-11)")
    solve.add_argument("--levels", type=int, default=3, help="refinement levels for the order check (default: 3)")

    geodesic = sub.add_parser("geodesic", help="integrate a geodesic and monitor conserved quantities")
    _add_common(geodesic)
    geodesic.add_argument("--state", type=parse_state, help="initial phase point u1,u2,p1,p2")
    geodesic.add_argument("--t-end", type=float, default=1.0, help="final time (default: 1.0)")
    geodesic.add_argument("--grid", type=parse_grid, help="grid for implicit examples: t0,t1,x0,x1,nt,nx")

    criterion = sub.add_parser("criterion", help="test for first integrals linear in the momenta")
    _add_common(criterion)
    criterion.add_argument("--threshold", type=float, default=1e-8, help="determinant threshold (default: 1e-8)")
    criterion.add_argument("--sign", type=int, choices=(1, -1), default=1, help="curvature sign convention")

    export = sub.add_parser("export", help="write the example as a JSON config")
    _add_common(export)

    sub.add_parser("list", help="list the built-in examples")
    return parser


def run_config_from_args(args: argparse.Namespace) -> RunConfig:
    options = {
        "command": args.command,
        "example": getattr(args, "example", None),
        "config_path": getattr(args, "config_path", None),
        "constants": parse_assignments(getattr(args, "constants", [])),
        "params": parse_assignments(getattr(args, "params", []), numeric=False, flag="--param"),
        "preset": getattr(args, "preset", None),
    }
    for name, attribute in (("out", "out"), ("seed", "seed"), ("tol", "tol"), ("samples", "samples"),
                            ("grid", "grid"), ("newton_tol", "newton_tol"), ("levels", "levels"),
                            ("state", "state"), ("t_end", "t_end"), ("threshold", "threshold"),
                            ("curvature_sign", "sign")):
        if getattr(args, attribute, None) is not None:
            options[name] = getattr(args, attribute)
    return RunConfig(**options)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors
        return int(exc.code or 0)
    configure_logging(args.verbose, args.quiet)
    try:
        config = run_config_from_args(args)
        result = Simulation(config).run_simulation()
    except _CONFIG_ERRORS as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    except IntegrabilityError as exc:
        logger.error("%s failed: %s", args.command, exc)
        return EXIT_FAILED
    except ValueError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    if result.command == "list":
        for item in result.report["examples"]:
            sys.stdout.write(f"{item['id']:<14} {item['kind']:<20} n={item['degree']}  {item['description']}\n")
        return result.exit_code
    summary = {
        "command": result.command,
        "example": result.report.get("example"),
        "passed": result.passed,
        "first_failure": result.report.get("first_failure"),
        "files": result.files,
    }
    sys.stdout.write(Exporter.json_text(summary))
    return result.exit_code


__all__ = ["build_parser", "configure_logging", "main", "run_config_from_args", "COMMANDS"]
