from typing import Any, Optional

from .base_session import BaseSession
from ..config import Config
from ..core.errors import PowerFlowError
from ..core.network import PowerNetwork
from ..core.powerflow import (
    ApproximateDispatch,
    ApproximateSolution,
    ErrorReport,
    PowerFlowSolution,
    VoltageState,
    newton_raphson,
    restore_ac_feasibility,
    solution_error_report,
)


class PowerFlowSession(BaseSession):
    """Exact AC power flow: Newton-Raphson runs, feasibility restoration and error reports"""

    log_prefix = "⚡ powerflow"

    def __init__(self, session_id: Optional[str] = None, config: Optional[Config] = None):
        super().__init__(session_id, config)
        pf_config = self.config.get("powerflow")
        self.tolerance = pf_config["tolerance"]
        self.max_iterations = pf_config["max_iterations"]
        self.q_tolerance = pf_config["q_limit_tolerance"]
        self.newton_iterations = 0
        self.restorations = 0

    def _record(self, solution: PowerFlowSolution) -> None:
        self.newton_iterations += solution.iterations
        if self.session_logger:
            self.session_logger.record_newton_iterations(solution.iterations)

    def run_newton(
        self, network: PowerNetwork, start: Optional[VoltageState] = None
    ) -> PowerFlowSolution:
        """Power flow of the case-file dispatch"""
        self.logger.info(f"Newton-Raphson on {network.name} ({network.n_bus} buses)")
        try:
            solution = newton_raphson(network, start, self.tolerance, self.max_iterations)
        except PowerFlowError as e:
            self.logger.error(f"Newton-Raphson failed: {e}")
            raise
        self._record(solution)
        self.logger.info(
            f"Newton-Raphson {'converged' if solution.converged else 'diverged'} after "
            f"{solution.iterations} iterations, mismatch {solution.max_mismatch:.3e}"
        )
        return solution

    def restore(self, network: PowerNetwork, approx: ApproximateDispatch) -> PowerFlowSolution:
        """Restore AC feasibility of an approximate dispatch"""
        try:
            solution = restore_ac_feasibility(
                network, approx, self.tolerance, self.max_iterations, self.q_tolerance
            )
        except PowerFlowError as e:
            self.logger.error(f"AC restoration failed: {e}")
            raise
        self.restorations += 1
        self._record(solution)
        if solution.converted_buses:
            self.logger.info(f"Buses switched from PV to PQ: {solution.converted_buses}")
        if solution.converged:
            self.logger.info(
                f"AC restoration converged, mismatch {solution.max_mismatch:.3e} "
                f"after {solution.iterations} Newton iterations"
            )
        else:
            self.logger.warning(f"AC restoration flagged: {solution.message}")
        return solution

    def report(
        self, network: PowerNetwork, approx: ApproximateSolution, exact: PowerFlowSolution
    ) -> ErrorReport:
        report = solution_error_report(network, approx, exact)
        s = report.summary
        self.logger.info(
            f"Errors vs restored AC: objective {s['objective_error_pct']:.3e}%, "
            f"v {s['max_v_error']:.3e} p.u., θ {s['max_theta_error']:.3e} rad, "
            f"P flow {s['max_P_flow_error']:.3e} p.u."
        )
        return report

    def stats(self) -> dict[str, Any]:
        return {"newton_iterations": self.newton_iterations, "restorations": self.restorations}
