import argparse
import json
from typing import List

from loguru import logger

from diveq import __version__, set_verbosity
from diveq.cli.config import validate
from diveq.cli.runner import export_snapshot, run_file
from diveq.utils.checks import (
    CheckpointFormatError,
    ConfigurationError,
    DiveqError,
    Violation,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_IO = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diveq", description="Differentiable vector quantization experiments"
    )
    parser.add_argument("--version", action="version", version=f"diveq {__version__}")
    parser.add_argument("--verbose", action="store_true", help="log every iteration")
    verbs = parser.add_subparsers(dest="verb", required=True)

    run_parser = verbs.add_parser("run", help="run an experiment")
    run_parser.add_argument("--config", required=True, help="JSON experiment configuration")
    run_parser.add_argument("--out", default=None, help="output directory, overrides output_dir")
    run_parser.add_argument("--seed-override", type=int, default=None, help="run this seed only")
    run_parser.add_argument("--workers", type=int, default=1, help="parallel runs")

    validate_parser = verbs.add_parser("validate", help="validate a configuration without running")
    validate_parser.add_argument("--config", required=True, help="JSON experiment configuration")

    snapshot_parser = verbs.add_parser(
        "export-snapshot", help="write a codebook and latents alignment snapshot"
    )
    snapshot_parser.add_argument("--checkpoint", required=True, help="codebook checkpoint")
    snapshot_parser.add_argument("--latents", default=None, help="latents in the dataset format")
    snapshot_parser.add_argument("--out", required=True, help="snapshot file")
    return parser


def _validate(config_path: str) -> int:
    violations = validate(config_path)
    print(json.dumps([violation.to_dict() for violation in violations], indent=2))
    if any(violation.severity == "error" for violation in violations):
        return EXIT_CONFIG
    return EXIT_OK


def main(argv: List[str] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        set_verbosity("DEBUG")
    try:
        if args.verb == "run":
            if args.workers < 1:
                raise ConfigurationError([Violation("workers", f"must be >= 1, got {args.workers}")])
            run_file(
                args.config,
                output_dir=args.out,
                seed_override=args.seed_override,
                workers=args.workers,
            )
        elif args.verb == "validate":
            return _validate(args.config)
        else:
            export_snapshot(args.checkpoint, args.latents, args.out)
    except ConfigurationError as error:
        logger.error("{}", error)
        return EXIT_CONFIG
    except (CheckpointFormatError, OSError) as error:
        logger.error("{}", error)
        return EXIT_IO
    except DiveqError as error:
        logger.error("{}: {}", type(error).__name__, error)
        return EXIT_RUNTIME
    return EXIT_OK
