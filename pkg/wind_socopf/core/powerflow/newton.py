"""Full Newton-Raphson AC power flow in polar coordinates with a sparse Jacobian."""
import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..errors import PowerFlowError
from ..network.model import BusType, PowerNetwork
from .flows import BranchFlows, VoltageState, build_ybus, exact_branch_flows

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PowerFlowSetup:
    """What each bus holds fixed: type codes, voltage targets and scheduled injections (p.u.)"""

    bus_types: np.ndarray
    v_target: np.ndarray
    gen_p: np.ndarray
    gen_q: np.ndarray
    wind_p: np.ndarray
    wind_q: np.ndarray

    def with_pq_bus(self, bus: int, gen_q: np.ndarray) -> "PowerFlowSetup":
        types = self.bus_types.copy()
        types[bus] = BusType.PQ
        return replace(self, bus_types=types, gen_q=gen_q)


@dataclass(eq=False)
class PowerFlowSolution:
    state: VoltageState
    flows: BranchFlows
    gen_p: np.ndarray
    gen_q: np.ndarray
    wind_p: np.ndarray
    wind_q: np.ndarray
    converged: bool
    iterations: int
    max_mismatch: float
    bus_types: np.ndarray
    converted_buses: list[int] = field(default_factory=list)
    message: str = ""


def default_setup(network: PowerNetwork) -> PowerFlowSetup:
    """Case-file dispatch: generator P/Q and voltage set points, wind at zero."""
    types = np.array([int(b.bus_type) for b in network.buses])
    has_gen = np.zeros(network.n_bus, dtype=bool)
    has_gen[network.gen_index] = True
    types[(types == BusType.PV) & ~has_gen] = BusType.PQ

    v_target = network.bus_array("v_init")
    for k, gen in enumerate(network.generators):
        v_target[network.gen_index[k]] = gen.v_set
    n_wind = len(network.wind_farms)
    return PowerFlowSetup(
        bus_types=types,
        v_target=v_target,
        gen_p=network.gen_array("P_init"),
        gen_q=network.gen_array("Q_init"),
        wind_p=np.zeros(n_wind),
        wind_q=np.zeros(n_wind),
    )


def _dS_dV(ybus: sp.csr_matrix, V: np.ndarray) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Partial derivatives of bus injections w.r.t. voltage angle and magnitude."""
    ibus = ybus @ V
    diag_v = sp.diags(V)
    diag_i = sp.diags(ibus)
    diag_vnorm = sp.diags(V / np.abs(V))
    dS_dVm = diag_v @ np.conj(ybus @ diag_vnorm) + np.conj(diag_i) @ diag_vnorm
    dS_dVa = 1j * diag_v @ np.conj(diag_i - ybus @ diag_v)
    return dS_dVa.tocsr(), dS_dVm.tocsr()


def solve_polar(
    ybus: sp.csr_matrix,
    s_spec: np.ndarray,
    V0: np.ndarray,
    pv: np.ndarray,
    pq: np.ndarray,
    tol: float,
    max_iter: int,
) -> tuple[np.ndarray, bool, int, float]:
    """Newton iterations on the mismatch [ΔP(pv, pq), ΔQ(pq)].

    Returns the complex voltages, convergence flag, number of updates and final mismatch.
    """
    V = V0.astype(complex)
    Vm, Va = np.abs(V), np.angle(V)
    pvpq = np.concatenate([pv, pq])
    n_pvpq = pvpq.size

    def mismatch(V: np.ndarray) -> np.ndarray:
        mis = V * np.conj(ybus @ V) - s_spec
        return np.concatenate([mis[pvpq].real, mis[pq].imag])

    F = mismatch(V)
    norm = float(np.max(np.abs(F), initial=0.0))
    iterations = 0
    while norm > tol and iterations < max_iter:
        dS_dVa, dS_dVm = _dS_dV(ybus, V)
        J = sp.vstack(
            [
                sp.hstack([dS_dVa[pvpq][:, pvpq].real, dS_dVm[pvpq][:, pq].real]),
                sp.hstack([dS_dVa[pq][:, pvpq].imag, dS_dVm[pq][:, pq].imag]),
            ],
            format="csc",
        )
        try:
            dx = -splu(J).solve(F)
        except RuntimeError as e:
            raise PowerFlowError(f"singular Jacobian at iteration {iterations + 1}: {e}") from e
        if not np.all(np.isfinite(dx)):
            raise PowerFlowError(f"non-finite Newton step at iteration {iterations + 1}")
        Va[pvpq] += dx[:n_pvpq]
        Vm[pq] += dx[n_pvpq:]
        V = Vm * np.exp(1j * Va)
        iterations += 1
        F = mismatch(V)
        norm = float(np.max(np.abs(F), initial=0.0))

    return V, norm <= tol, iterations, norm


def _share(total: float, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Split ``total`` over units in proportion to their ranges, starting from their minimums."""
    span = hi - lo
    if span.sum() > 0.0:
        return lo + (total - lo.sum()) * span / span.sum()
    return np.full(lo.size, total / lo.size)


def newton_raphson(
    network: PowerNetwork,
    start: Optional[VoltageState] = None,
    tol: float = 1e-8,
    max_iter: int = 30,
    setup: Optional[PowerFlowSetup] = None,
) -> PowerFlowSolution:
    """Solve the AC power flow; a non-converged result is a status, not an error."""
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    setup = setup or default_setup(network)
    n = network.n_bus
    start = start or VoltageState.flat(n)

    types = setup.bus_types
    ref = np.flatnonzero(types == BusType.REF)
    pv = np.flatnonzero(types == BusType.PV)
    pq = np.flatnonzero(types == BusType.PQ)
    if ref.size != 1:
        raise PowerFlowError(f"power flow needs exactly one slack bus, found {ref.size}")

    P_sched = -network.bus_array("Pd")
    Q_sched = -network.bus_array("Qd")
    np.add.at(P_sched, network.gen_index, setup.gen_p)
    np.add.at(Q_sched, network.gen_index, setup.gen_q)
    if network.wind_farms:
        np.add.at(P_sched, network.wind_index, setup.wind_p)
        np.add.at(Q_sched, network.wind_index, setup.wind_q)

    Vm = start.v.astype(float).copy()
    Va = start.theta.astype(float).copy()
    controlled = np.concatenate([ref, pv])
    Vm[controlled] = setup.v_target[controlled]
    Va = Va - Va[ref[0]]

    ybus = build_ybus(network)
    V, converged, iterations, norm = solve_polar(
        ybus, P_sched + 1j * Q_sched, Vm * np.exp(1j * Va), pv, pq, tol, max_iter
    )
    state = VoltageState(np.abs(V), np.angle(V))
    s_calc = V * np.conj(ybus @ V)

    # generator outputs that close the balance at slack and PV buses
    gen_p = setup.gen_p.astype(float).copy()
    gen_q = setup.gen_q.astype(float).copy()
    wind_p_bus = np.zeros(n)
    wind_q_bus = np.zeros(n)
    if network.wind_farms:
        np.add.at(wind_p_bus, network.wind_index, setup.wind_p)
        np.add.at(wind_q_bus, network.wind_index, setup.wind_q)
    q_min, q_max = network.gen_array("Q_min"), network.gen_array("Q_max")
    p_min, p_max = network.gen_array("P_min"), network.gen_array("P_max")
    for bus in np.concatenate([ref, pv]):
        units = np.flatnonzero(network.gen_index == bus)
        if units.size == 0:
            continue
        load = network.buses[bus]
        q_need = s_calc[bus].imag + load.Qd - wind_q_bus[bus]
        gen_q[units] = _share(q_need, q_min[units], q_max[units])
        if bus == ref[0]:
            p_need = s_calc[bus].real + load.Pd - wind_p_bus[bus]
            gen_p[units] += _share(p_need - gen_p[units].sum(), np.zeros(units.size), p_max[units] - p_min[units])

    if not converged:
        logger.warning(f"{network.name}: Newton-Raphson stopped at mismatch {norm:.3e} after {iterations} iterations")

    return PowerFlowSolution(
        state=state,
        flows=exact_branch_flows(network, state),
        gen_p=gen_p,
        gen_q=gen_q,
        wind_p=setup.wind_p.astype(float).copy(),
        wind_q=setup.wind_q.astype(float).copy(),
        converged=converged,
        iterations=iterations,
        max_mismatch=norm,
        bus_types=types.copy(),
        message="" if converged else f"diverged, mismatch {norm:.3e}",
    )
