import logging
import os
from logging.handlers import TimedRotatingFileHandler
from typing import Optional, Union

from colorlog import ColoredFormatter

LOG_FILE_NAME = 'pdro.log'
PLAIN_FORMAT = '%(asctime)s[%(name)s] - %(levelname)s - %(message)s - %(processName)s'
COLOR_FORMAT = (
    '%(green)s%(asctime)s%(reset)s[%(blue)s%(name)s%(reset)s] - '
    '%(log_color)s%(levelname)s%(reset)s - %(green)s%(message)s%(reset)s - '
    '%(cyan)s%(processName)s%(reset)s'
)
LOG_COLORS = {
    'DEBUG': 'cyan',
    'INFO': 'white',
    'WARNING': 'yellow',
    'ERROR': 'red',
    'CRITICAL': 'red,bg_white',
}


def _console_handler(level) -> logging.Handler:
    handler = logging.StreamHandler()
    handler.setLevel(level)
    handler.setFormatter(ColoredFormatter(COLOR_FORMAT, log_colors=LOG_COLORS))
    return handler


def _level(level: Union[str, int]) -> int:
    if isinstance(level, int):
        return level
    value = logging.getLevelName(str(level).upper())
    if not isinstance(value, int):
        raise ValueError(f"unknown log level: {level}")
    return value


def setup_logging(level: Union[str, int] = "INFO", log_dir: Optional[str] = None) -> Optional[str]:
    """Configure the root logger for command line runs.

    Args:
        level: root log level, a name or a ``logging`` constant
        log_dir: when given, also write a daily rotated ``pdro.log`` there

    Returns:
        Optional[str]: path of the log file, or None for console-only logging
    """
    level = _level(level)
    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    # main() may run repeatedly in one process
    if root_logger.handlers:
        root_logger.handlers.clear()
    root_logger.addHandler(_console_handler(level))

    log_file = None
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)
        log_file = os.path.join(log_dir, LOG_FILE_NAME)
        file_handler = TimedRotatingFileHandler(
            log_file,
            when='midnight',
            interval=1,
            backupCount=30,
            encoding='utf-8'
        )
        file_handler.setLevel(level)
        file_handler.suffix = "%Y-%m-%d.log"
        file_handler.setFormatter(logging.Formatter(PLAIN_FORMAT))
        root_logger.addHandler(file_handler)

    logging.debug("Logging initialised, level=%s, file=%s", logging.getLevelName(level), log_file)
    return log_file


def configure_worker_logging(level: int):
    """
    Console logging inside a trial worker process at the parent's level.

    Forked workers inherit the parent's handlers and are left alone;
    spawned workers start with a bare root logger.
    """
    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    if not root_logger.handlers:
        root_logger.addHandler(_console_handler(level))


def get_logger(name):
    """
    Return a module logger carrying the ``error_exc`` helper.

    Args:
        name: logger name, normally ``__name__``

    Returns:
        logging.Logger

    Example:
        logger = get_logger(__name__)
        logger.info("solved in %d iterations", k)
        logger.error_exc("trial failed: %s", err)
    """
    logger = logging.getLogger(name)

    def log_error_with_exc(msg, *args, **kwargs):
        """Log an error together with the active traceback."""
        kwargs['exc_info'] = True
        logger.error(msg, *args, **kwargs)

    logger.error_exc = log_error_with_exc

    return logger
