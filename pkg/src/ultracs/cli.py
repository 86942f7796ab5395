"""Command-line entry point.

Subcommands map one-to-one onto the harness commands; every run needs a
config file and an output directory.  Exit codes: 0 success, 2 config
problems, 1 anything else, always with a single "error: ..." line on
stderr so callers can scrape failures.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, ExperimentConfig
from .harness import cmd_design, cmd_image, cmd_min_patterns, cmd_transport

_COMMANDS = {
    "transport": cmd_transport,
    "design": cmd_design,
    "image": cmd_image,
    "min-patterns": cmd_min_patterns,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ultracs",
        description="Design and simulate lensless time-resolved compressive imaging.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "transport": "transport operators, ring maps, resolution tables",
        "design": "sensor placement and illumination pattern studies",
        "image": "simulate measurements and reconstruct a target",
        "min-patterns": "find the smallest pattern count hitting quality targets",
    }
    for name, help_text in descriptions.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--out", required=True, help="output directory for artifacts")
        p.add_argument("--seed", type=int, default=0, help="offset added to all config seeds")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = ExperimentConfig.load(args.config)
        _COMMANDS[args.command](config, args.out, args.seed)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
