"""
Command line driver.

    qharm <command> --config run.json [--out report.json] [key.path=value ...] [-v]

Commands: verify-identities, build-algebra, max-principle, recover.

Exit codes: 0 when every check in the report passed, 1 when a check failed,
2 when the configuration could not be read or is invalid.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import COMMANDS, RunConfig, load_run_config
from .errors import ConfigError, DomainError
from .experiments import run_battery
from .json_io import dumps_report, write_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qharm",
        description="Quaternionic harmonic field experiments with JSON reports.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", default=None, help="report path (default: config 'out' or stdout)")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    parser.add_argument("overrides", nargs="*", metavar="key.path=value", help="config overrides")
    return parser


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    """Parse argv; ``key.path=value`` overrides may appear before or after the options."""
    return build_parser().parse_intermixed_args(argv)


def _run(cfg: RunConfig, out: str | None) -> int:
    report = run_battery(cfg)
    target = out or cfg.out
    if target:
        write_json(target, report)
        logger.info(f"[CLI] report written to {target}")
    else:
        sys.stdout.write(dumps_report(report) + "\n")
    return EXIT_OK if report["pass"] else EXIT_FAILED


def cmd_verify_identities(cfg: RunConfig, out: str | None = None) -> int:
    return _run(cfg, out)


def cmd_build_algebra(cfg: RunConfig, out: str | None = None) -> int:
    return _run(cfg, out)


def cmd_max_principle(cfg: RunConfig, out: str | None = None) -> int:
    return _run(cfg, out)


def cmd_recover(cfg: RunConfig, out: str | None = None) -> int:
    return _run(cfg, out)


COMMAND_HANDLERS = {
    "verify-identities": cmd_verify_identities,
    "build-algebra": cmd_build_algebra,
    "max-principle": cmd_max_principle,
    "recover": cmd_recover,
}


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_run_config(args.config, args.overrides, command=args.command)
    except ConfigError as e:
        print(f"qharm: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    logger.debug(f"[CLI] {cfg.command} seed={cfg.seed} backend={cfg.backend} threads={cfg.threads}")
    try:
        return COMMAND_HANDLERS[cfg.command](cfg, args.out)
    except (ConfigError, DomainError) as e:
        print(f"qharm: invalid configuration: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
