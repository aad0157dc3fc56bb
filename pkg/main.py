import sys

from src.cli.commands import build_parser
from src.constants.constants import ExitCode
from src.utils.exceptions import PdroError, UsageError
from src.utils.logging_config import get_logger, setup_logging

logger = get_logger(__name__)


def main(argv=None) -> int:
    """Program entry point; returns 0 on success, 1 on usage errors, 2 on failures."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"pdro: error: {e}", file=sys.stderr)
        return ExitCode.USAGE
    except SystemExit as e:
        # --help
        return int(e.code or 0)

    setup_logging(args.log_level, args.log_dir)
    try:
        return args.handler(args)
    except UsageError as e:
        print(f"pdro: error: {e}", file=sys.stderr)
        return ExitCode.USAGE
    except PdroError as e:
        logger.error_exc("%s failed: %s", args.command, e)
        return ExitCode.RUNTIME
    except Exception as e:
        logger.error_exc("unexpected error in %s: %s", args.command, e)
        return ExitCode.RUNTIME


if __name__ == "__main__":
    sys.exit(main())
