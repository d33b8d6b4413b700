import logging
from typing import Optional

from ftcbf.core.config import get_settings

_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
_FORMAT = "%(asctime)s %(levelname)-5s %(name)s: %(message)s"


def configure_logging(level: Optional[str] = None) -> logging.Logger:
    """Install one stream handler on the package logger.

    `level` defaults to FTCBF_LOG. Safe to call repeatedly; only the level changes.
    """
    name = level or get_settings().log_level
    root = logging.getLogger("ftcbf")
    root.setLevel(_LEVELS.get(name, logging.INFO))
    if not any(getattr(h, "_ftcbf", False) for h in root.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(_FORMAT))
        handler._ftcbf = True
        root.addHandler(handler)
    return root
