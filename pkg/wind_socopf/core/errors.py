from typing import Optional

EXIT_OK = 0
EXIT_NOT_CONVERGED = 1
EXIT_INPUT_ERROR = 2
EXIT_SOLVER_FAILURE = 3


class SocopfError(Exception):
    """Base class for all errors raised by wind-socopf"""

    exit_code = EXIT_SOLVER_FAILURE

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "message": str(self)}


class CaseParseError(SocopfError, ValueError):
    """Malformed MATPOWER case text"""

    exit_code = EXIT_INPUT_ERROR

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)

    def to_dict(self) -> dict:
        payload = super().to_dict()
        payload["line"] = self.line
        return payload


class NetworkValidationError(SocopfError, ValueError):
    exit_code = EXIT_INPUT_ERROR


class ConfigurationError(SocopfError, ValueError):
    exit_code = EXIT_INPUT_ERROR


class WindDataError(SocopfError, ValueError):
    """Unusable wind samples or GMM artifacts"""

    exit_code = EXIT_INPUT_ERROR


class ConicSolveError(SocopfError, RuntimeError):
    exit_code = EXIT_SOLVER_FAILURE


class PowerFlowError(SocopfError, RuntimeError):
    """Numerical breakdown of the Newton-Raphson iteration (singular Jacobian)"""

    exit_code = EXIT_SOLVER_FAILURE
