"""Entry point for the multipcl command line."""

import argparse
import os
import sys
from collections.abc import Mapping, MutableMapping, Sequence
from typing import Any, NoReturn

import structlog

from multipcl.config.loader import ConfigNotFoundError
from multipcl.errors import (
    AnnotationError,
    ConfigurationError,
    DegenerateAgreementError,
    DomainError,
    ManifestParseError,
    ManifestValidationError,
    MultiPCLError,
    StratificationError,
    UsageError,
)
from multipcl.runner import SUBCOMMANDS, CommandInvocation, load_config, run

EventDict = MutableMapping[str, Any]
ProcessorReturn = Mapping[str, Any] | str | bytes | bytearray | tuple[Any, ...]

LOG_LEVELS = {
    "debug": 10,
    "info": 20,
    "warn": 30,
    "warning": 30,
    "error": 40,
    "critical": 50,
}

# first match wins, so subclasses precede their bases
EXIT_CODES: tuple[tuple[type[BaseException], int], ...] = (
    (UsageError, 2),
    (ConfigNotFoundError, 4),
    (ConfigurationError, 3),
    (FileNotFoundError, 4),
    (ManifestParseError, 5),
    (ManifestValidationError, 5),
    (StratificationError, 5),
    (AnnotationError, 5),
    (DegenerateAgreementError, 5),
    (DomainError, 5),
    (MultiPCLError, 6),
    (OSError, 6),
)


def exit_code(error: BaseException) -> int:
    """Exit status for an error raised by a workflow (1 when unclassified)."""
    for cls, code in EXIT_CODES:
        if isinstance(error, cls):
            return code
    return 1


def make_level_filter(min_level: str) -> structlog.types.Processor:
    """Filter log messages below min_level.

    Args:
        min_level: Minimum log level to pass through (debug, info, warn, error).

    Returns:
        Processor function for structlog pipeline.
    """
    min_level_num = LOG_LEVELS.get(min_level.lower(), 20)

    def level_filter(
        logger: structlog.types.WrappedLogger,
        method_name: str,
        event_dict: EventDict,
    ) -> ProcessorReturn:
        level_num = LOG_LEVELS.get(method_name, 20)
        if level_num < min_level_num:
            raise structlog.DropEvent
        return event_dict

    return level_filter


def setup_logging(level: str = "info", fmt: str = "auto") -> None:
    """Configure structlog for the application.

    Logs go to stderr so that tables printed on stdout stay clean. The "auto"
    format uses console output for a TTY and JSON otherwise.

    Args:
        level: Minimum log level to output.
        fmt: "auto", "console" or "json".
    """
    console = fmt == "console" or (fmt == "auto" and sys.stderr.isatty())
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            make_level_filter(level),
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.dev.ConsoleRenderer() if console else structlog.processors.JSONRenderer(),
        ],
        wrapper_class=structlog.BoundLogger,
        context_class=dict,
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser that raises UsageError instead of printing usage and exiting."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(message)


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    """Parse command line arguments.

    Args:
        argv: Arguments without the program name (default: sys.argv[1:]).

    Returns:
        Parsed arguments namespace.

    Raises:
        UsageError: On unknown subcommands, flags or malformed values.
    """
    parser = ArgumentParser(
        prog="multipcl", description="Multimodal patronizing-language video classifier"
    )
    parser.add_argument("command", choices=SUBCOMMANDS, help="Workflow to run")
    parser.add_argument(
        "path",
        nargs="?",
        help="Input file: manifest (validate, stats, ingest, train, eval, grid, predict) "
        "or annotation table (kappa); defaults to the configured data paths",
    )
    parser.add_argument(
        "--config",
        type=str,
        help="Path to config file (default: auto-discover from standard paths)",
    )
    parser.add_argument("--seed", type=int, help="Master seed (overrides the config's seed)")
    parser.add_argument(
        "--jobs", type=int, default=1, help="Worker threads for ingestion and folds (default: 1)"
    )
    parser.add_argument("--out", default="runs", help="Artifact directory (default: runs)")
    parser.add_argument(
        "--subset",
        help="Modality subset key such as V+T; grid takes a comma-separated list",
    )
    parser.add_argument(
        "--variant",
        choices=["mhca", "fc", "both"],
        help="Fusion variant; grid accepts both",
    )
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Config override with a dotted key, repeatable (beats every other source)",
    )
    parser.add_argument(
        "--log-level",
        choices=["debug", "info", "warn", "error"],
        default=os.environ.get("MPCL_LOG_LEVEL", "").lower() or None,
        help="Log level (default: the config's logging.level, or MPCL_LOG_LEVEL env var)",
    )
    return parser.parse_args(argv)


def main(argv: Sequence[str] | None = None) -> None:
    """Main entry point for the multipcl command line."""
    logger = structlog.get_logger()
    try:
        args = parse_args(argv)
        setup_logging(args.log_level or "info")
        invocation = CommandInvocation(
            command=args.command,
            config_path=args.config,
            overrides=list(args.overrides),
            out_dir=args.out,
            path=args.path,
            seed=args.seed,
            jobs=args.jobs,
            subsets=args.subset,
            variant=args.variant,
        )
        config = load_config(invocation)
        setup_logging(args.log_level or config.logging.level, config.logging.format)
        code = run(invocation, config)
    except KeyboardInterrupt:
        logger.info("interrupted by user")
        code = 130
    except Exception as e:
        code = exit_code(e)
        if code == 1:
            logger.error("unexpected failure", error=str(e), exc_info=True)
        print(f"error: {type(e).__name__}: {e}".replace("\n", " "), file=sys.stderr)
    sys.exit(code)


if __name__ == "__main__":
    main()
