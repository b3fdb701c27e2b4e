import os
import time
from typing import Any, Optional

from .base_session import BaseSession
from ..config import Config
from ..core.conic import ConicEngine, ConicSolution, dump_program, make_engine, validate_program
from ..core.errors import ConicSolveError
from ..core.network import PowerNetwork
from ..core.relaxation import (
    AssemblyOptions,
    CutSet,
    ExactnessDiagnostic,
    OperatingPoint,
    SocaProblem,
    assemble_soca_problem,
    exactness_condition,
)


class RelaxationSession(BaseSession):
    """Assembles SOCA programs around operating points and solves them on the conic engine"""

    log_prefix = "🧮 relaxation"

    def __init__(
        self,
        session_id: Optional[str] = None,
        config: Optional[Config] = None,
        dump_dir: Optional[str] = None,
    ):
        """Initialize relaxation session"""
        super().__init__(session_id, config)
        solver_config = self.config.get("solver")
        self.tolerance = solver_config["tolerance"]
        self.engine = self._initialize_engine(solver_config)
        self.dump_dir = dump_dir
        self.solves = 0
        self.dumps: list[str] = []

    def _initialize_engine(self, solver_config: dict) -> ConicEngine:
        """Initialize the conic engine and check it can run here"""
        engine = make_engine(
            backend=solver_config["backend"],
            solver=solver_config["cvxpy_solver"],
            max_iterations=solver_config["max_iterations"],
        )
        if not engine.available():
            raise ConicSolveError(
                f"conic backend {solver_config['backend']}/{solver_config['cvxpy_solver']} is not available"
            )
        return engine

    def assemble(
        self,
        network: PowerNetwork,
        point: OperatingPoint,
        cuts: Optional[CutSet] = None,
        options: Optional[AssemblyOptions] = None,
    ) -> SocaProblem:
        """Build the SOCA program and log any structural diagnostics"""
        problem = assemble_soca_problem(network, point, cuts, options)
        for diagnostic in validate_program(problem.program):
            if diagnostic.level == "error":
                self.logger.error(f"Program check: {diagnostic.message}")
            else:
                self.logger.warning(f"Program check: {diagnostic.message}")
        return problem

    def solve(self, problem: SocaProblem, tag: str = "") -> ConicSolution:
        """Solve an assembled program with timing and optional dumps"""
        start = time.perf_counter()
        solution = self.engine.solve(problem.program, self.tolerance)
        elapsed = time.perf_counter() - start
        self.solves += 1
        if self.session_logger:
            self.session_logger.record_conic_solve(elapsed)

        self.logger.info(
            f"Conic solve {tag or self.solves}: {solution.status.value}, "
            f"objective {solution.objective:.6f}, {solution.iterations} iterations, {elapsed:.3f}s"
        )
        if solution.optimal and not solution.accurate:
            self.logger.warning(f"Conic solve {tag or self.solves} is only approximately optimal")
        if self.dump_dir:
            self.dump(problem, tag or f"solve{self.solves}")
        return solution

    def solve_point(
        self,
        network: PowerNetwork,
        point: OperatingPoint,
        cuts: Optional[CutSet] = None,
        options: Optional[AssemblyOptions] = None,
        tag: str = "",
    ) -> tuple[SocaProblem, ConicSolution]:
        problem = self.assemble(network, point, cuts, options)
        return problem, self.solve(problem, tag)

    def dump(self, problem: SocaProblem, tag: str, directory: Optional[str] = None) -> str:
        """Write the program in the sparse-triplet format and return its path"""
        directory = directory or self.dump_dir or os.path.join(self.sessions_dir, "dumps")
        os.makedirs(directory, exist_ok=True)
        path = os.path.join(directory, f"{self.session_id}-{tag}.txt")
        dump_program(problem.program, path)
        self.dumps.append(path)
        self.logger.info(f"Program dumped to {path}")
        return path

    def exactness(
        self, network: PowerNetwork, problem: SocaProblem, solution: ConicSolution
    ) -> ExactnessDiagnostic:
        diagnostic = exactness_condition(network, problem, solution)
        if not diagnostic.available:
            self.logger.warning("Exactness diagnostic unavailable: solver returned no usable duals")
        else:
            self.logger.info(
                f"Exactness condition positive on {int(diagnostic.positive.sum())}/{network.n_branch} branches, "
                f"inconclusive on {int(diagnostic.inconclusive.sum())}"
            )
        return diagnostic

    def stats(self) -> dict[str, Any]:
        return {"conic_solves": self.solves, "dumps": list(self.dumps)}
