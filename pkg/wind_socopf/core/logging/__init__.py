from .session_logger import SessionLogger, new_session_id

__all__ = ["SessionLogger", "new_session_id"]
