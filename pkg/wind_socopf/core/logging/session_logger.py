import os
import logging
import uuid
from datetime import datetime
from logging.handlers import RotatingFileHandler

DEFAULT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(prefix)s - %(message)s"


def new_session_id() -> str:
    """Timestamp plus a short random suffix, also used as the log file name"""
    timestamp = datetime.now().strftime("%Y%m%d-%H%M%S")
    return f"{timestamp}-{uuid.uuid4().hex[:6]}"


class SessionLogger:
    def __init__(
        self,
        session_id: str,
        sessions_dir: str,
        level: str = "INFO",
        fmt: str = DEFAULT_FORMAT,
        max_size_mb: float = 1,
        retention: int = 5,
    ):
        self.session_id = session_id
        self.sessions_dir = sessions_dir
        self.level = level
        self.fmt = fmt
        self.max_size_mb = max_size_mb
        self.retention = retention
        self.logger = self._setup_logging()

        # Run statistics
        self.conic_solves = 0
        self.conic_seconds = 0.0
        self.newton_iterations = 0
        self.cut_rounds = 0

    def _setup_logging(self) -> logging.Logger:
        """Configure logging for the run"""
        os.makedirs(self.sessions_dir, exist_ok=True)
        log_formatter = logging.Formatter(self.fmt)
        log_file = os.path.join(self.sessions_dir, f"{self.session_id}.log")

        file_handler = RotatingFileHandler(
            log_file, maxBytes=int(self.max_size_mb * 1024 * 1024), backupCount=self.retention
        )
        file_handler.setFormatter(log_formatter)
        file_handler.setLevel(logging.DEBUG)

        console_handler = logging.StreamHandler()
        console_handler.setFormatter(log_formatter)
        console_handler.setLevel(self.level)

        logger = logging.getLogger(self.session_id)
        # a reused session id must not duplicate handlers
        for handler in list(logger.handlers):
            logger.removeHandler(handler)
            handler.close()
        logger.addHandler(file_handler)
        logger.addHandler(console_handler)
        logger.setLevel(logging.DEBUG)
        logger.propagate = False

        return logger

    def record_conic_solve(self, seconds: float) -> None:
        self.conic_solves += 1
        self.conic_seconds += seconds

    def record_newton_iterations(self, iterations: int) -> None:
        self.newton_iterations += iterations

    def record_cut_round(self) -> None:
        self.cut_rounds += 1

    def stats(self) -> dict[str, float]:
        return {
            "conic_solves": self.conic_solves,
            "conic_seconds": self.conic_seconds,
            "newton_iterations": self.newton_iterations,
            "cut_rounds": self.cut_rounds,
        }

    def log_run_summary(self) -> None:
        """Log the accumulated run statistics."""
        prefix = "📊 session"
        self.logger.info(f"Conic solves: {self.conic_solves}", extra={"prefix": prefix})
        self.logger.info(
            f"Conic solve time: {self.conic_seconds:.3f}s", extra={"prefix": prefix}
        )
        self.logger.info(
            f"Newton-Raphson iterations: {self.newton_iterations}", extra={"prefix": prefix}
        )
        self.logger.info(f"Cut rounds: {self.cut_rounds}", extra={"prefix": prefix})

    def close(self) -> None:
        for handler in list(self.logger.handlers):
            self.logger.removeHandler(handler)
            handler.close()
