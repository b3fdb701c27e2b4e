import logging

import cvxpy as cp
import numpy as np

from ..network.model import PowerNetwork
from .problem import OperatingPoint

logger = logging.getLogger(__name__)


def dc_opf_initializer(network: PowerNetwork, solver: str = "CLARABEL") -> OperatingPoint:
    """Warm-start point from the lossless B-θ OPF (v = 1, DC angles).

    Falls back to a flat start when the DC problem is infeasible or the solver fails.
    """
    n, E = network.n_bus, network.n_branch
    f, t = network.from_index, network.to_index
    base = network.base_MVA

    theta = cp.Variable(n)
    pg = cp.Variable(network.n_gen)
    susceptance = 1.0 / (network.branch_array("x") * network.branch_array("tau"))
    shift = network.branch_array("phi_shift")
    flow = cp.multiply(susceptance, theta[f] - theta[t] - shift)

    gen_inc = np.zeros((n, network.n_gen))
    gen_inc[network.gen_index, np.arange(network.n_gen)] = 1.0
    branch_inc = np.zeros((n, E))
    branch_inc[f, np.arange(E)] += 1.0
    branch_inc[t, np.arange(E)] -= 1.0

    injection = gen_inc @ pg
    objective = cp.sum(cp.multiply(network.gen_array("c2"), cp.square(pg))) + network.gen_array("c1") @ pg
    constraints = [
        theta[network.slack_index] == 0.0,
        pg >= network.gen_array("P_min"),
        pg <= network.gen_array("P_max"),
        theta[f] - theta[t] <= network.branch_array("theta_max"),
        theta[f] - theta[t] >= network.branch_array("theta_min"),
    ]

    farms = [(w, farm) for w, farm in enumerate(network.wind_farms) if farm.pwl is not None]
    if farms:
        pw = cp.Variable(len(farms))
        gamma = cp.Variable(len(farms))
        wind_inc = np.zeros((n, len(farms)))
        for col, (w, farm) in enumerate(farms):
            wind_inc[network.wind_index[w], col] = 1.0
            constraints += [
                pw[col] >= farm.P_wind_min / base,
                pw[col] <= farm.P_wind_max / base,
                gamma[col] >= farm.pwl.slopes * base * pw[col] + farm.pwl.intercepts,
            ]
        injection = injection + wind_inc @ pw
        objective = objective + cp.sum(gamma)

    load = network.bus_array("Pd") + network.bus_array("gsh")
    constraints.append(injection - load == branch_inc @ flow)
    s_max = network.branch_array("S_max")
    limited = np.flatnonzero((s_max > 0.0) & np.isfinite(s_max))
    if limited.size:
        constraints.append(cp.abs(flow[limited]) <= s_max[limited])

    problem = cp.Problem(cp.Minimize(objective), constraints)
    try:
        problem.solve(solver=solver)
    except cp.error.SolverError as e:
        logger.warning(f"{network.name}: DC OPF solver failed ({e}), using a flat start")
        return OperatingPoint.flat(network)
    if problem.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) or theta.value is None:
        logger.warning(f"{network.name}: DC OPF is {problem.status}, using a flat start")
        return OperatingPoint.flat(network)

    return OperatingPoint(np.ones(n), np.asarray(theta.value, dtype=float)).project(network)
