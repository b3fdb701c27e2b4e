"""Accuracy metrics of an approximate solution against its restored AC solution."""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol

import numpy as np
import pandas as pd

from ..network.model import PowerNetwork
from .flows import BranchFlows, normalized_flow_error
from .newton import PowerFlowSolution
from .restore import ApproximateDispatch


class ApproximateSolution(ApproximateDispatch, Protocol):
    flows: BranchFlows
    objective: float
    wind_cost: float


@dataclass(eq=False)
class ErrorReport:
    branches: pd.DataFrame
    buses: pd.DataFrame
    objective_approx: float
    objective_exact: float
    objective_error_pct: float
    summary: dict[str, Any] = field(default_factory=dict)

    def to_csv(self, directory: Path | str) -> tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        branch_path = directory / "branch_errors.csv"
        bus_path = directory / "bus_errors.csv"
        self.branches.to_csv(branch_path, index=False)
        self.buses.to_csv(bus_path, index=False)
        return branch_path, bus_path

    def to_json(self, path: Path | str) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.summary, indent=2))
        return path


def _stats(series: pd.Series) -> tuple[float, float]:
    if series.empty:
        return 0.0, 0.0
    return float(series.max()), float(series.mean())


def solution_error_report(
    network: PowerNetwork, approx: ApproximateSolution, exact: PowerFlowSolution
) -> ErrorReport:
    """Branch, bus and objective errors; the reference objective is the restored AC one.

    The restored objective keeps the wind schedule, so it is the fossil cost at the
    restored generator outputs plus the approximate wind cost.
    """
    a, e = approx.flows, exact.flows
    branches = pd.DataFrame(
        {
            "from_bus": [br.from_bus for br in network.branches],
            "to_bus": [br.to_bus for br in network.branches],
            "P_loss_error": np.abs(a.P_loss - e.P_loss),
            "Q_loss_error": np.abs(a.Q_loss - e.Q_loss),
            "P_flow_error": np.maximum(np.abs(a.P_ij - e.P_ij), np.abs(a.P_ji - e.P_ji)),
            "Q_flow_error": np.maximum(np.abs(a.Q_ij - e.Q_ij), np.abs(a.Q_ji - e.Q_ji)),
            "gamma": normalized_flow_error(a, e),
        }
    )
    buses = pd.DataFrame(
        {
            "bus": [b.id for b in network.buses],
            "v_error": np.abs(np.asarray(approx.state.v) - exact.state.v),
            "theta_error": np.abs(np.asarray(approx.state.theta) - exact.state.theta),
        }
    )

    f_approx = float(approx.objective)
    f_exact = network.generation_cost(exact.gen_p) + float(approx.wind_cost)
    if f_exact == 0.0:
        objective_error = 0.0 if f_approx == 0.0 else float("inf")
    else:
        objective_error = abs(f_approx - f_exact) / abs(f_exact) * 100.0

    summary: dict[str, Any] = {
        "case": network.name,
        "objective_reference": "restored_ac",
        "objective_approx": f_approx,
        "objective_exact": f_exact,
        "objective_error_pct": objective_error,
        "restoration_converged": bool(exact.converged),
        "converted_buses": list(exact.converted_buses),
    }
    for column in ("P_loss_error", "Q_loss_error", "P_flow_error", "Q_flow_error"):
        summary[f"max_{column}"], summary[f"mean_{column}"] = _stats(branches[column])
    for column in ("v_error", "theta_error"):
        summary[f"max_{column}"], summary[f"mean_{column}"] = _stats(buses[column])
    summary["max_abs_gamma"] = float(branches["gamma"].abs().max()) if len(branches) else 0.0

    return ErrorReport(
        branches=branches,
        buses=buses,
        objective_approx=f_approx,
        objective_exact=f_exact,
        objective_error_pct=objective_error,
        summary=summary,
    )
