import logging
import sys

from .cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VERDICT, build_parser, run
from .errors import (
    ConfigError,
    DeformationError,
    DiracDetectionError,
    DiscrepancyError,
    DomainError,
    HoneycombError,
    SymmetryError,
)
from .log import configure_logging

logger = logging.getLogger("honeydirac.app")  # stable name when run as __main__

EXIT_CODES = (
    ((ConfigError, SymmetryError, DomainError, OSError), EXIT_CONFIG),
    ((DiracDetectionError, DeformationError, DiscrepancyError), EXIT_VERDICT),
    ((HoneycombError,), EXIT_NUMERICAL),
)


def exit_code_for(error):
    for types, code in EXIT_CODES:
        if isinstance(error, types):
            return code
    return 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)

    try:
        code = run(args)
    except HoneycombError as e:
        reason = getattr(e, "reason", None)
        logger.error("%s%s", e, f" [{reason}]" if reason else "")
        if e.diagnostics:
            logger.info("diagnostics: %s", e.diagnostics)
        return exit_code_for(e)
    except OSError as e:
        logger.error("I/O error: %s", e)
        return exit_code_for(e)

    if code == 0:
        logger.info("%s finished", args.command)
    else:
        logger.warning("%s finished with a failed check", args.command)
    return code


if __name__ == "__main__":
    sys.exit(main())
