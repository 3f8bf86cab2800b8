import logging
import sys

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str = "WARNING") -> None:
    """
    Send log records to stderr so that reports written to stdout stay clean.
    """
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, "_focalframes", False):
            root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler._focalframes = True
    root.addHandler(handler)
    root.setLevel(getattr(logging, level.upper(), logging.WARNING))
