"""
Main entry point for the roommates-reduce command line.
"""
import json
import logging
import sys
from typing import Optional, Sequence

from rich.console import Console

from cli.commands import UsageError, build_parser
from cli.formats import digest
from cli.models import InstanceSummary, RunReport
from config import EXIT_PRECONDITION, EXIT_USAGE, LOG_LEVEL
from core.exceptions import (
    BadPartition,
    DomainMismatch,
    EdgeInEM,
    InstanceTooLarge,
    InvalidInstance,
    InvalidMatching,
    NotBipartite,
    NotPerfectCore,
    NotReducible,
    NotSemiStable,
    ParseError,
    PreconditionViolated,
    UnknownEdge,
    UnknownMethod,
)
from utils.log import configure_logging
from utils.session import close_session, create_session

log = logging.getLogger(__name__)

USAGE_ERRORS = (ParseError, InvalidInstance, InvalidMatching, UnknownEdge, UnknownMethod, UsageError)
PRECONDITION_ERRORS = (
    NotReducible,
    PreconditionViolated,
    NotPerfectCore,
    DomainMismatch,
    InstanceTooLarge,
    EdgeInEM,
    BadPartition,
    NotBipartite,
    NotSemiStable,
)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one subcommand and print its report.

    Returns:
        0 on success, 1 when no stable matching exists, 2 when a
        precondition fails, 3 on malformed input or usage.
    """
    out = Console()
    err = Console(stderr=True)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        err.print(f"error: {e}", markup=False, highlight=False)
        return EXIT_USAGE
    except SystemExit as e:
        return int(e.code or 0)

    level = {0: LOG_LEVEL, 1: "INFO"}.get(args.verbose, "DEBUG")
    configure_logging(level)
    session = create_session(args.command)
    try:
        outcome = args.handler(args, session)
    except USAGE_ERRORS as e:
        err.print(f"error: {e}", markup=False, highlight=False)
        return EXIT_USAGE
    except PRECONDITION_ERRORS as e:
        err.print(f"precondition failed: {e}", markup=False, highlight=False)
        return EXIT_PRECONDITION
    finally:
        close_session(session.session_id)

    if args.json:
        report = RunReport(
            command=args.command,
            instance=InstanceSummary(
                digest=digest(outcome.instance),
                agents=len(outcome.instance.agents),
                edges=len(outcome.instance.edges),
            ),
            result=outcome.result,
            warnings=session.warnings,
            stats=session.counters,
        )
        out.out(json.dumps(report.model_dump(), sort_keys=True), highlight=False)
    else:
        for line in outcome.text:
            out.out(line, highlight=False)
        for warning in session.warnings:
            err.print(f"warning: {warning}", markup=False, highlight=False)
    return outcome.code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
