"""Recover an AC-feasible operating point from an approximate dispatch."""
import logging
from typing import Protocol

import numpy as np

from ..network.model import BusType, PowerNetwork
from .flows import VoltageState, exact_branch_flows
from .newton import PowerFlowSetup, PowerFlowSolution, default_setup, newton_raphson

logger = logging.getLogger(__name__)


class ApproximateDispatch(Protocol):
    """Anything carrying a voltage state and per-unit dispatch"""

    state: VoltageState
    gen_p: np.ndarray
    gen_q: np.ndarray
    wind_p: np.ndarray
    wind_q: np.ndarray


def _setup_from(network: PowerNetwork, approx: ApproximateDispatch) -> PowerFlowSetup:
    base = default_setup(network)
    return PowerFlowSetup(
        bus_types=base.bus_types,
        v_target=np.asarray(approx.state.v, dtype=float).copy(),
        gen_p=np.asarray(approx.gen_p, dtype=float).copy(),
        gen_q=np.asarray(approx.gen_q, dtype=float).copy(),
        wind_p=np.asarray(approx.wind_p, dtype=float).copy(),
        wind_q=np.asarray(approx.wind_q, dtype=float).copy(),
    )


def _worst_q_violation(
    network: PowerNetwork, solution: PowerFlowSolution, q_tol: float
) -> tuple[int, float]:
    """Bus of the largest generator Q-limit violation among PV buses, or (-1, 0)."""
    q_min, q_max = network.gen_array("Q_min"), network.gen_array("Q_max")
    excess = np.maximum(solution.gen_q - q_max, q_min - solution.gen_q)
    on_pv = solution.bus_types[network.gen_index] == BusType.PV
    excess = np.where(on_pv, excess, 0.0)
    if excess.size == 0 or excess.max() <= q_tol:
        return -1, 0.0
    k = int(np.argmax(excess))
    return int(network.gen_index[k]), float(excess[k])


def _flagged(
    network: PowerNetwork, approx: ApproximateDispatch, last: PowerFlowSolution, message: str
) -> PowerFlowSolution:
    logger.warning(f"{network.name}: AC restoration failed, returning the approximate point ({message})")
    state = VoltageState(
        np.asarray(approx.state.v, dtype=float), np.asarray(approx.state.theta, dtype=float)
    )
    return PowerFlowSolution(
        state=state,
        flows=exact_branch_flows(network, state),
        gen_p=np.asarray(approx.gen_p, dtype=float).copy(),
        gen_q=np.asarray(approx.gen_q, dtype=float).copy(),
        wind_p=np.asarray(approx.wind_p, dtype=float).copy(),
        wind_q=np.asarray(approx.wind_q, dtype=float).copy(),
        converged=False,
        iterations=last.iterations,
        max_mismatch=last.max_mismatch,
        bus_types=last.bus_types,
        converted_buses=list(last.converted_buses),
        message=message,
    )


def restore_ac_feasibility(
    network: PowerNetwork,
    approx: ApproximateDispatch,
    tol: float = 1e-8,
    max_iter: int = 30,
    q_tol: float = 1e-6,
) -> PowerFlowSolution:
    """Run Newton-Raphson holding PQ injections, PV (P, v) and the slack voltage.

    Generators whose reactive output leaves [Q_min, Q_max] are pinned at the violated
    limit one bus at a time (worst first) and their bus becomes PQ before re-solving.
    A restoration that does not converge is returned with ``converged=False`` and the
    approximate point.
    """
    setup = _setup_from(network, approx)
    start = VoltageState(
        np.asarray(approx.state.v, dtype=float),
        np.asarray(approx.state.theta, dtype=float),
    )
    q_min, q_max = network.gen_array("Q_min"), network.gen_array("Q_max")
    converted: list[int] = []
    iterations = 0

    while True:
        solution = newton_raphson(network, start, tol, max_iter, setup)
        iterations += solution.iterations
        if not solution.converged:
            logger.info(f"{network.name}: restoration retrying from a flat start")
            solution = newton_raphson(network, VoltageState.flat(network.n_bus), tol, max_iter, setup)
            iterations += solution.iterations
        solution.converted_buses = list(converted)
        if not solution.converged:
            return _flagged(network, approx, solution, f"Newton-Raphson diverged, mismatch {solution.max_mismatch:.3e}")

        bus, excess = _worst_q_violation(network, solution, q_tol)
        if bus < 0:
            solution.iterations = iterations
            return solution

        units = network.gen_index == bus
        pinned = solution.gen_q.copy()
        pinned[units] = np.clip(pinned[units], q_min[units], q_max[units])
        logger.info(
            f"{network.name}: bus {network.buses[bus].id} exceeds its Q limit by {excess:.3e} p.u., switching PV to PQ"
        )
        setup = setup.with_pq_bus(bus, pinned)
        converted.append(int(network.buses[bus].id))
        start = solution.state
