import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional

from ..tracing import command_span
from .commands import COMMANDS, as_conebreak_error, run_command
from .schemas import load_config
from .writers import write_error

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s %(message)s"


def _positive(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conebreak")
    parser.add_argument("command", choices=[*COMMANDS, "sweep"])
    parser.add_argument("--config", required=True, help="TOML run configuration")
    parser.add_argument("--out", help="output directory, overrides [output].directory")
    parser.add_argument("--jobs", type=_positive, default=1, help="concurrent sweep entries")
    parser.add_argument("--seed", type=int, help="overrides [solver].seed")
    parser.add_argument("--verbose", action="store_true")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    options = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if options.verbose else logging.INFO, format=LOG_FORMAT)

    out_dir = Path(options.out) if options.out else None
    try:
        config = load_config(options.config)
        if options.seed is not None:
            config = config.with_value("solver.seed", options.seed)
        if options.out:
            config = config.with_value("output.directory", options.out)
        out_dir = Path(config.output.directory)
        with command_span(options.command, config_hash=config.config_hash(), seed=config.solver.seed):
            run_command(options.command, config, out_dir, jobs=options.jobs)
    except Exception as exc:
        error = as_conebreak_error(exc)
        if out_dir is not None:
            write_error(out_dir, error)
        print(json.dumps(error.json()), file=sys.stderr)
        return error.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
