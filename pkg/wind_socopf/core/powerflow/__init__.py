from .flows import (
    BranchFlows,
    VoltageState,
    build_ybus,
    bus_injections,
    exact_branch_flows,
    normalized_flow_error,
)
from .newton import PowerFlowSetup, PowerFlowSolution, default_setup, newton_raphson, solve_polar
from .report import ApproximateSolution, ErrorReport, solution_error_report
from .restore import ApproximateDispatch, restore_ac_feasibility

__all__ = [
    "ApproximateDispatch",
    "ApproximateSolution",
    "BranchFlows",
    "ErrorReport",
    "PowerFlowSetup",
    "PowerFlowSolution",
    "VoltageState",
    "build_ybus",
    "bus_injections",
    "default_setup",
    "exact_branch_flows",
    "newton_raphson",
    "normalized_flow_error",
    "restore_ac_feasibility",
    "solution_error_report",
    "solve_polar",
]
