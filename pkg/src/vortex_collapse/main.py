"""Command-line entry point for vortex-collapse."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import TYPE_CHECKING

from vortex_collapse import __version__
from vortex_collapse.cli import (
    ExitCode,
    RunOverrides,
    load_scenario,
    resolve_template,
    run_scenario,
    sweep,
)
from vortex_collapse.config import Settings
from vortex_collapse.exceptions import ScenarioError
from vortex_collapse.logger import get_logger, setup_root_logger

if TYPE_CHECKING:
    from collections.abc import Sequence

log = get_logger(__name__)

_MAX_SEED = 2**64


def _float_list(text: str) -> list[float]:
    items = [s.strip() for s in text.split(",") if s.strip()]
    if not items:
        raise argparse.ArgumentTypeError("expected a nonempty comma-separated list")
    try:
        return [float(s) for s in items]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _seed_list(text: str) -> list[int]:
    items = [s.strip() for s in text.split(",") if s.strip()]
    if not items:
        raise argparse.ArgumentTypeError("expected a nonempty comma-separated list")
    return [_seed(s) for s in items]


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from e
    if not 0 <= value < _MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> float:
    try:
        value = float(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"invalid number {text!r}") from e
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with the ``run`` and ``sweep`` subcommands."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, required=True, help="output directory")
    common.add_argument("--tol", type=_positive, help="relative tolerance of the integrator")
    common.add_argument("--collapse-radius", type=_positive, help="collapse detection radius")
    common.add_argument("--seed", type=_seed, help="seed for random vortex sources")
    common.add_argument("--log-level", help="override VORTEX_LOG_LEVEL")
    common.add_argument("--log-json", action="store_true", help="emit JSON log lines")

    parser = argparse.ArgumentParser(
        prog="vortex-collapse",
        description="Simulate alpha-point-vortex systems and check collapse predictions.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="run one scenario")
    run.add_argument("scenario", type=Path, help="scenario JSON file")

    sw = sub.add_parser("sweep", parents=[common], help="run a template over several alphas")
    sw.add_argument("--alphas", type=_float_list, required=True, help="comma-separated alphas")
    sw.add_argument(
        "--template", required=True, help="scenario file or bundled template name"
    )
    sw.add_argument("--seeds", type=_seed_list, help="comma-separated seeds")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point for the command line.

    Returns:
        0 on success, 1 if a sweep row failed, 2 for usage or scenario errors,
        3 for integration failures and 4 for failed analysis preconditions.
    """
    args = build_parser().parse_args(argv)
    settings = Settings()
    setup_root_logger(
        name="vortex_collapse",
        level=args.log_level or settings.log_level,
        json_format=args.log_json or settings.log_json,
    )
    overrides = RunOverrides(rel_tol=args.tol, collapse_radius=args.collapse_radius, seed=args.seed)

    try:
        if args.command == "run":
            scenario = load_scenario(args.scenario)
            outcome = run_scenario(scenario, args.out, settings, overrides)
            return int(outcome.exit_code)
        template = resolve_template(args.template)
        code, _ = sweep(
            template, args.alphas, args.out, settings, seeds=args.seeds, overrides=overrides
        )
        return int(code)
    except ScenarioError as e:
        log.error("invalid scenario", error=str(e))
        return int(ExitCode.USAGE)


if __name__ == "__main__":
    sys.exit(main())
