"""``levyspde`` command line.

Exit codes: 0 success, 1 usage or configuration error, 2 when an assertion
suite reports violations.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .. import __version__
from .config import EXPERIMENTS, ConfigError, ExperimentConfig, load_config, manifest_text, parse_manifest
from .experiments import REGISTRY

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="levyspde", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI file; omitted keys take defaults")
        p.add_argument("--seed", type=_u64, required=True)
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--replicas", type=_positive, default=None)
        p.add_argument("--threads", type=_positive, default=1)
    p = sub.add_parser("replay", help="rerun a run manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=_positive, default=1)
    return parser


def _write(directory: str, name: str, text: str) -> None:
    with open(os.path.join(directory, name), "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def run(config: ExperimentConfig, threads: int = 1) -> int:
    """Execute one experiment, write its CSVs and manifest, return the exit code."""
    try:
        os.makedirs(config.output, exist_ok=True)
    except OSError as exc:
        print(f"levyspde: cannot create {config.output}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    runner = REGISTRY[config.experiment]
    try:
        if threads > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                outcome = runner(config, pool.map)
        else:
            outcome = runner(config, map)
    except ConfigError as exc:
        print(f"levyspde: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        for name, text in outcome.files.items():
            _write(config.output, name, text)
        _write(config.output, "manifest.ini", manifest_text(config, __version__))
    except OSError as exc:
        print(f"levyspde: cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for line in outcome.lines:
        print(line)
    return EXIT_VIOLATION if outcome.violations else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "replay":
            config = parse_manifest(args.manifest, args.out)
        else:
            config = load_config(args.config, args.command, args.seed, args.replicas, args.out)
    except ConfigError as exc:
        print(f"levyspde: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(config, args.threads)


if __name__ == "__main__":
    sys.exit(main())
