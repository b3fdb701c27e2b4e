import os
import logging
from abc import ABC, abstractmethod
from typing import Any, Optional

from ..config import Config
from ..core.logging import SessionLogger, new_session_id


class BaseSession(ABC):
    """Base class for all session types"""

    log_prefix = "🔷 base"  # overridden by subclasses

    def __init__(self, session_id: Optional[str] = None, config: Optional[Config] = None):
        self.config = config or Config()
        self.session_id = session_id or new_session_id()
        self.sessions_dir = os.path.join(os.getcwd(), self.config.get("logging", "log_dir"))
        self.session_logger: Optional[SessionLogger] = None
        # module logger until the orchestrator hands over the session logger
        self.logger = logging.LoggerAdapter(
            logging.getLogger(type(self).__module__), {"prefix": self.log_prefix}
        )

    def set_logger(self, session_logger: SessionLogger) -> None:
        """Route this session's records through the shared session logger"""
        self.session_logger = session_logger
        self.logger = logging.LoggerAdapter(session_logger.logger, {"prefix": self.log_prefix})

    @abstractmethod
    def stats(self) -> dict[str, Any]:
        """Counters accumulated by this session"""
