"""Logger."""

import logging
import sys

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class Logger:
    """Logger class."""

    def __init__(self, name: str, level: int = logging.INFO, file_name: str = None):
        """Initialize the logger.

        Parameters
        ----------
        name: str
            Name of the logger, usually the package name `diffusion_el`.
        level: int, optional, default is logging.INFO
            Logging level.
        file_name: str, optional, default is None
            File the log records are also written to.
        """
        if file_name is not None:
            logging.basicConfig(level=level, format=LOG_FORMAT, filename=file_name)
        self.logger = logging.getLogger(name)
        self.logger.setLevel(level)
        if not any(getattr(h, "diffusion_el", False) for h in self.logger.handlers):
            handler = logging.StreamHandler(stream=sys.stdout)
            handler.setFormatter(logging.Formatter(LOG_FORMAT))
            handler.diffusion_el = True
            self.logger.addHandler(handler)
