from abc import ABC, abstractmethod

from .program import ConicProgram, ConicSolution


class ConicEngine(ABC):
    """Abstract base class for conic solver backends"""

    name = "abstract"

    @abstractmethod
    def solve(self, program: ConicProgram, tol: float = 1e-8) -> ConicSolution:
        """Solve the program; infeasibility and failures come back as statuses"""
        pass

    @abstractmethod
    def available(self) -> bool:
        """Whether the backend can be used in this environment"""
        pass
