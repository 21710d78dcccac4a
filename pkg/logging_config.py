import structlog
import logging
import logging.handlers
import os


def _resolve_log_dir(log_dir):
    if os.path.exists(log_dir):
        return log_dir
    try:
        os.makedirs(log_dir)
        return log_dir
    except PermissionError:
        fallback = os.environ.get('TMPDIR', '/tmp')
        return fallback if os.path.exists(fallback) else '.'


def setup_logging(level=None, log_dir=None):
    """Configure structlog on top of the standard library logger.

    Structured JSON events go to stderr and to a rotating ``aris_sim.log``
    inside the log directory. Optimizer loops log at DEBUG, so a run at INFO
    shows only stage-level events.

    Args:
        level (str, optional): Log level name. Defaults to ``LOG_LEVEL`` or INFO.
        log_dir (str, optional): Log directory. Defaults to ``LOG_DIR`` or ``logs``.
    """
    level_name = (level or os.environ.get('LOG_LEVEL', 'INFO')).upper()
    numeric_level = getattr(logging, level_name, logging.INFO)

    logging.basicConfig(
        format="%(message)s",
        level=numeric_level,
        handlers=[
            logging.StreamHandler(),
        ]
    )
    logging.getLogger().setLevel(numeric_level)

    log_dir = _resolve_log_dir(log_dir or os.environ.get('LOG_DIR', 'logs'))

    # One rotating file per process; repeated calls replace it.
    root = logging.getLogger()
    for handler in [h for h in root.handlers if isinstance(h, logging.handlers.RotatingFileHandler)]:
        root.removeHandler(handler)
        handler.close()

    file_handler = logging.handlers.RotatingFileHandler(
        filename=os.path.join(log_dir, 'aris_sim.log'),
        maxBytes=int(os.environ.get('LOG_MAX_BYTES', 10 * 1024 * 1024)),
        backupCount=int(os.environ.get('LOG_BACKUP_COUNT', 5))
    )
    file_handler.setLevel(numeric_level)
    root.addHandler(file_handler)

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            structlog.processors.JSONRenderer()
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )


def get_logger(name=None):
    """Get a structlog logger instance.

    Args:
        name (str, optional): Logger name. Defaults to None.

    Returns:
        structlog.BoundLogger: Configured logger instance.
    """
    return structlog.get_logger(name)


def get_run_logger(**context):
    """Get a logger for one optimization run, pre-bound with run context.

    Args:
        **context: Key/values bound to every event (e.g. scheme, seed).

    Returns:
        structlog.BoundLogger: Logger named ``runs`` carrying the context.
    """
    return structlog.get_logger("runs").bind(**context)
