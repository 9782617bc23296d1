import sys
from typing import Optional, Sequence

from gqg.api import dispatch
from gqg.models import ExitStatus
from gqg.utils import Config, configure_logging, get_logger

logger = get_logger(__name__)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Console entrypoint: configure logging, validate settings, run one command"""
    configure_logging(Config.LOG_LEVEL)

    try:
        Config.validate()
    except ValueError as e:
        logger.error("Configuration validation failed", error=str(e))
        return int(ExitStatus.CONFIG_ERROR)

    return dispatch(argv)


if __name__ == "__main__":
    sys.exit(main())
