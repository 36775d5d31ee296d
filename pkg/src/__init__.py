import logging
import threading
from typing import Optional, TYPE_CHECKING

from config import BaseConfig

if TYPE_CHECKING:
    from src.modules.victim import Victim

__version__ = "0.3.0"

LOG_FORMAT = '[%(levelname)s] %(asctime)s - %(name)s - %(message)s'


def configure_logging(level: Optional[str] = None) -> logging.Logger:
    """
    Installs the package stream handler once and sets the package log level.

    Args:
        level (Optional[str]): A logging level name. Defaults to BaseConfig.LOG_LEVEL.

    Returns:
        logging.Logger: The package root logger.
    """
    logger = logging.getLogger(__name__)
    logger.setLevel((level or BaseConfig.LOG_LEVEL).upper())
    if not any(getattr(handler, "_table_attack", False) for handler in logger.handlers):
        console_handler = logging.StreamHandler()
        console_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        console_handler._table_attack = True
        logger.addHandler(console_handler)
    return logger


class ApplicationManager(BaseConfig):
    def __init__(self, victim_spec: Optional[str] = None):
        super().__init__()
        self.logger = logging.getLogger(__name__)
        self.victim_spec = victim_spec if victim_spec is not None else self.VICTIM_SPEC
        self.victim = None
        self._lock = threading.Lock()

    def initialize(self):
        """Resolves the served victim from its spec string."""
        # Deferred: the victim package imports config through src.
        from src.modules.victim import resolve_victim

        with self._lock:
            if self.victim is None:
                if not self.victim_spec:
                    raise RuntimeError(
                        "TABLE_ATTACK_VICTIM is not set; expected 'prototype:<model file>'.")
                self.logger.info("Loading victim %s...", self.victim_spec)
                self.victim = resolve_victim(self.victim_spec)
                self.logger.info(
                    "Victim loaded with %d classes.", len(self.victim.classes))

    def get_victim(self) -> "Victim":
        """Returns the victim instance, loading it on first access."""
        if self.victim is None:
            self.initialize()
        return self.victim


app_manager = ApplicationManager()
