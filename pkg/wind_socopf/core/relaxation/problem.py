"""Assembly of the wind-integrated SOCA-OPF conic program around an operating point.

Variables live in the (u = v², θ) state space. Every branch gets the relaxed
auxiliaries φv (≤ √(u_i·u_j)) and φθ (≥ θ_ij²) shared by both directions, and four
flow variables tied to them by the linear Taylor flow rows.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..conic.program import ConicProgram, ConicSolution, ProgramBuilder
from ..errors import ConfigurationError
from ..network.model import PowerNetwork
from ..powerflow.flows import BranchFlows, VoltageState
from .coefficients import FlowCoefficients, flow_coefficients
from .cuts import CutSet
from .limits import FULL_CIRCLE, linearize_flow_limits

logger = logging.getLogger(__name__)

# Taylor expansion needs |θk| < π/2
_MAX_EXPANSION_ANGLE = math.pi / 2 - 1e-3


@dataclass(frozen=True, eq=False)
class OperatingPoint:
    v: np.ndarray
    theta: np.ndarray

    @classmethod
    def flat(cls, network: PowerNetwork) -> "OperatingPoint":
        return cls(np.ones(network.n_bus), np.zeros(network.n_bus))

    def project(self, network: PowerNetwork) -> "OperatingPoint":
        """Clip v into its bounds and shift angles so the slack sits at 0."""
        if self.v.shape != (network.n_bus,) or self.theta.shape != (network.n_bus,):
            raise ValueError(
                f"operating point has {self.v.size} buses, network has {network.n_bus}"
            )
        v = np.clip(self.v, network.bus_array("v_min"), network.bus_array("v_max"))
        theta = self.theta - self.theta[network.slack_index]
        return OperatingPoint(v, theta)

    def branch_angles(self, network: PowerNetwork) -> np.ndarray:
        """Expansion angle θ_ij,k per branch, kept inside the angle bounds."""
        theta = self.theta[network.from_index] - self.theta[network.to_index]
        lo = np.maximum(network.branch_array("theta_min"), -_MAX_EXPANSION_ANGLE)
        hi = np.minimum(network.branch_array("theta_max"), _MAX_EXPANSION_ANGLE)
        return np.clip(theta, lo, hi)

    def towards(self, other: "OperatingPoint", damping: float) -> "OperatingPoint":
        return OperatingPoint(
            self.v + damping * (other.v - self.v),
            self.theta + damping * (other.theta - self.theta),
        )

    @property
    def state(self) -> VoltageState:
        return VoltageState(self.v, self.theta)


@dataclass(frozen=True)
class AssemblyOptions:
    flow_limit_segments: int = 16
    flow_limit_arc: tuple[float, float] = FULL_CIRCLE


@dataclass(frozen=True, eq=False)
class VariableIndex:
    Pg: np.ndarray
    Qg: np.ndarray
    u: np.ndarray
    theta: np.ndarray
    phi_v: np.ndarray
    phi_theta: np.ndarray
    P_ij: np.ndarray
    Q_ij: np.ndarray
    P_ji: np.ndarray
    Q_ji: np.ndarray
    P_w: np.ndarray
    Q_w: np.ndarray
    gamma: np.ndarray


@dataclass(frozen=True, eq=False)
class LimitRows:
    """Inequality rows of the linearized flow limits"""

    rows: np.ndarray
    branch: np.ndarray
    direction: np.ndarray  # 0 for ij, 1 for ji
    cos: np.ndarray
    sin: np.ndarray


@dataclass(frozen=True, eq=False)
class SocaProblem:
    program: ConicProgram
    index: VariableIndex
    point: OperatingPoint
    cuts: CutSet
    theta_k: np.ndarray
    fc_ij: FlowCoefficients
    fc_ji: FlowCoefficients
    p_balance_rows: np.ndarray
    q_balance_rows: np.ndarray
    limits: LimitRows
    cut_rows: dict[int, tuple[int, int]] = field(default_factory=dict)


def assemble_soca_problem(
    network: PowerNetwork,
    point: OperatingPoint,
    cuts: Optional[CutSet] = None,
    options: Optional[AssemblyOptions] = None,
) -> SocaProblem:
    cuts = cuts or CutSet()
    options = options or AssemblyOptions()
    point = point.project(network)
    for farm in network.wind_farms:
        if farm.pwl is None:
            raise ConfigurationError(f"wind farm at bus {farm.bus} has no PWL cost")
    if any(k < 0 or k >= network.n_branch for k in cuts.cuts):
        raise ValueError("cut set references a branch outside the network")

    n, E = network.n_bus, network.n_branch
    base = network.base_MVA
    f, t = network.from_index, network.to_index
    coeffs = network.coefficients
    theta_k = point.branch_angles(network)
    fc_ij, fc_ji = flow_coefficients(coeffs, theta_k, point.v[f], point.v[t])

    v_min, v_max = network.bus_array("v_min"), network.bus_array("v_max")
    th_min, th_max = network.branch_array("theta_min"), network.branch_array("theta_max")
    eta = np.where(np.isfinite(th_max - th_min), (th_max - th_min) ** 2, np.inf)

    pb = ProgramBuilder()
    Pg = pb.add_variables("Pg", network.n_gen, network.gen_array("P_min"), network.gen_array("P_max"))
    Qg = pb.add_variables("Qg", network.n_gen, network.gen_array("Q_min"), network.gen_array("Q_max"))
    u = pb.add_variables("u", n, v_min**2, v_max**2)
    theta = pb.add_variables("theta", n)
    phi_v = pb.add_variables("phi_v", E, 0.0, v_max[f] * v_max[t])
    phi_theta = pb.add_variables("phi_theta", E, 0.0, eta)
    P_ij = pb.add_variables("P_ij", E)
    Q_ij = pb.add_variables("Q_ij", E)
    P_ji = pb.add_variables("P_ji", E)
    Q_ji = pb.add_variables("Q_ji", E)
    farms = network.wind_farms
    P_w = pb.add_variables(
        "P_w",
        len(farms),
        [farm.P_wind_min / base for farm in farms],
        [farm.P_wind_max / base for farm in farms],
    )
    Q_w = pb.add_variables("Q_w", len(farms))
    gamma = pb.add_variables("gamma", len(farms))
    pb.set_bounds(int(theta[network.slack_index]), 0.0, 0.0)

    for k, gen in enumerate(network.generators):
        pb.add_quadratic_cost(int(Pg[k]), 2.0 * gen.c2)
        pb.add_linear_cost(int(Pg[k]), gen.c1)
        pb.c0 += gen.c0
    for w in range(len(farms)):
        pb.add_linear_cost(int(gamma[w]), 1.0)

    # bus balance: generation + wind − shunt − outgoing flows = demand
    p_rows = np.empty(n, dtype=int)
    q_rows = np.empty(n, dtype=int)
    for i, bus in enumerate(network.buses):
        units = np.flatnonzero(network.gen_index == i)
        winds = np.flatnonzero(network.wind_index == i) if farms else np.zeros(0, dtype=int)
        out, inc = np.flatnonzero(f == i), np.flatnonzero(t == i)
        flow_cols_p = [*P_ij[out], *P_ji[inc]]
        flow_cols_q = [*Q_ij[out], *Q_ji[inc]]
        cols = [*Pg[units], *P_w[winds], int(u[i]), *flow_cols_p]
        vals = [1.0] * (units.size + winds.size) + [-bus.gsh] + [-1.0] * len(flow_cols_p)
        p_rows[i] = pb.add_eq(cols, vals, bus.Pd, f"P_balance[{bus.id}]")
        cols = [*Qg[units], *Q_w[winds], int(u[i]), *flow_cols_q]
        vals = [1.0] * (units.size + winds.size) + [bus.bsh] + [-1.0] * len(flow_cols_q)
        q_rows[i] = pb.add_eq(cols, vals, bus.Qd, f"Q_balance[{bus.id}]")

    for k in range(E):
        i, j = int(f[k]), int(t[k])
        tk = theta_k[k]
        label = f"{network.branches[k].from_bus}-{network.branches[k].to_bus}"
        for P_var, Q_var, fc, gs, bs, u_end, sign in (
            (P_ij, Q_ij, fc_ij, coeffs.g_f, coeffs.b_f, u[i], 1.0),
            (P_ji, Q_ji, fc_ji, coeffs.g_t, coeffs.b_t, u[j], -1.0),
        ):
            direction = "ij" if sign > 0 else "ji"
            bP, bPl = fc.bP[k], fc.bPloss[k]
            gQ, gQl = fc.gQ[k], fc.gQloss[k]
            pb.add_eq(
                [int(P_var[k]), int(u_end), int(phi_v[k]), int(theta[i]), int(theta[j]), int(phi_theta[k])],
                [1.0, -gs[k], fc.gP[k], sign * bP, -sign * bP, bPl],
                bP * sign * tk + bPl * tk**2,
                f"P_{direction}[{label}]",
            )
            pb.add_eq(
                [int(Q_var[k]), int(u_end), int(phi_v[k]), int(theta[i]), int(theta[j]), int(phi_theta[k])],
                [1.0, bs[k], -fc.bQ[k], sign * gQ, -sign * gQ, gQl],
                gQ * sign * tk + gQl * tk**2,
                f"Q_{direction}[{label}]",
            )

    for w, farm in enumerate(farms):
        pb.add_eq([int(Q_w[w]), int(P_w[w])], [1.0, -farm.tan_phi], 0.0, f"Q_wind[{farm.bus}]")
        for slope, intercept in zip(farm.pwl.slopes, farm.pwl.intercepts):
            # γ ≥ slope·P_MW + intercept, with P_MW = base·P_w
            pb.add_ineq([int(P_w[w]), int(gamma[w])], [slope * base, -1.0], -intercept, f"pwl[{farm.bus}]")

    for k, br in enumerate(network.branches):
        i, j = int(f[k]), int(t[k])
        if math.isfinite(br.theta_max):
            pb.add_ineq([int(theta[i]), int(theta[j])], [1.0, -1.0], br.theta_max, f"angle_max[{k}]")
        if math.isfinite(br.theta_min):
            pb.add_ineq([int(theta[i]), int(theta[j])], [-1.0, 1.0], -br.theta_min, f"angle_min[{k}]")

    limit_rows, limit_branch, limit_dir, limit_cos, limit_sin = [], [], [], [], []
    for k, br in enumerate(network.branches):
        rows = linearize_flow_limits(
            br.S_max if not br.unlimited else 0.0,
            options.flow_limit_segments,
            options.flow_limit_arc,
        )
        for direction, (P_var, Q_var) in enumerate(((P_ij, Q_ij), (P_ji, Q_ji))):
            for cos, sin, s_max in rows:
                limit_rows.append(
                    pb.add_ineq([int(P_var[k]), int(Q_var[k])], [cos, sin], s_max, f"limit[{k}]")
                )
                limit_branch.append(k)
                limit_dir.append(direction)
                limit_cos.append(cos)
                limit_sin.append(sin)

    cut_rows: dict[int, tuple[int, int]] = {}
    for k, cut in cuts.items():
        i, j = int(f[k]), int(t[k])
        slope, rhs = cut.theta_row()
        row_theta = pb.add_ineq(
            [int(phi_theta[k]), int(theta[i]), int(theta[j])], [1.0, -slope, slope], rhs, f"cut_theta[{k}]"
        )
        a_i, a_j, rhs = cut.voltage_row()
        row_v = pb.add_ineq(
            [int(u[i]), int(u[j]), int(phi_v[k])], [a_i, a_j, -1.0], rhs, f"cut_v[{k}]"
        )
        cut_rows[k] = (row_theta, row_v)

    for k in range(E):
        i, j = int(f[k]), int(t[k])
        pb.add_soc(
            [
                ([int(u[i]), int(u[j])], [1.0, 1.0], 0.0),
                ([int(phi_v[k])], [2.0], 0.0),
                ([int(u[i]), int(u[j])], [1.0, -1.0], 0.0),
            ],
            f"soc_v[{k}]",
        )
        pb.add_soc(
            [
                ([int(phi_theta[k])], [1.0], 1.0),
                ([int(theta[i]), int(theta[j])], [2.0, -2.0], 0.0),
                ([int(phi_theta[k])], [1.0], -1.0),
            ],
            f"soc_theta[{k}]",
        )

    index = VariableIndex(Pg, Qg, u, theta, phi_v, phi_theta, P_ij, Q_ij, P_ji, Q_ji, P_w, Q_w, gamma)
    program = pb.build()
    logger.debug(
        f"{network.name}: SOCA program with {program.n} variables, {program.n_eq} equalities, "
        f"{program.n_ineq} inequalities, {len(program.cones)} cones, {len(cuts)} cut branches"
    )
    return SocaProblem(
        program=program,
        index=index,
        point=point,
        cuts=cuts,
        theta_k=theta_k,
        fc_ij=fc_ij,
        fc_ji=fc_ji,
        p_balance_rows=p_rows,
        q_balance_rows=q_rows,
        limits=LimitRows(
            rows=np.array(limit_rows, dtype=int),
            branch=np.array(limit_branch, dtype=int),
            direction=np.array(limit_dir, dtype=int),
            cos=np.array(limit_cos, dtype=float),
            sin=np.array(limit_sin, dtype=float),
        ),
        cut_rows=cut_rows,
    )


@dataclass(frozen=True, eq=False)
class IterateValues:
    """Primal values of one solved SOCA program (per unit, wind cost in $/h)"""

    gen_p: np.ndarray
    gen_q: np.ndarray
    u: np.ndarray
    theta: np.ndarray
    phi_v: np.ndarray
    phi_theta: np.ndarray
    flows: BranchFlows
    wind_p: np.ndarray
    wind_q: np.ndarray
    gamma: np.ndarray
    objective: float

    @property
    def v(self) -> np.ndarray:
        return np.sqrt(np.maximum(self.u, 0.0))

    @property
    def state(self) -> VoltageState:
        return VoltageState(self.v, self.theta)

    @property
    def wind_cost(self) -> float:
        return float(self.gamma.sum())

    def operating_point(self) -> OperatingPoint:
        return OperatingPoint(self.v, self.theta.copy())


def extract_iterate(problem: SocaProblem, solution: ConicSolution) -> IterateValues:
    if solution.x is None:
        raise ValueError(f"no primal values in a {solution.status.value} solution")
    x, idx = solution.x, problem.index
    return IterateValues(
        gen_p=x[idx.Pg].copy(),
        gen_q=x[idx.Qg].copy(),
        u=x[idx.u].copy(),
        theta=x[idx.theta].copy(),
        phi_v=x[idx.phi_v].copy(),
        phi_theta=x[idx.phi_theta].copy(),
        flows=BranchFlows(
            P_ij=x[idx.P_ij].copy(),
            Q_ij=x[idx.Q_ij].copy(),
            P_ji=x[idx.P_ji].copy(),
            Q_ji=x[idx.Q_ji].copy(),
        ),
        wind_p=x[idx.P_w].copy(),
        wind_q=x[idx.Q_w].copy(),
        gamma=x[idx.gamma].copy(),
        objective=float(solution.objective),
    )


@dataclass(frozen=True, eq=False)
class RelaxationGap:
    theta: np.ndarray  # φθ − θ², nonnegative under the relaxation
    v: np.ndarray  # φv − √(u_i·u_j), nonpositive under the relaxation

    @property
    def combined(self) -> np.ndarray:
        return self.theta + np.abs(self.v)

    def violating(self, tolerance: float) -> np.ndarray:
        return self.combined >= tolerance

    @property
    def max_combined(self) -> float:
        return float(np.max(self.combined, initial=0.0))


def relaxation_gap(network: PowerNetwork, iterate: IterateValues) -> RelaxationGap:
    f, t = network.from_index, network.to_index
    theta_ij = iterate.theta[f] - iterate.theta[t]
    uu = np.maximum(iterate.u[f], 0.0) * np.maximum(iterate.u[t], 0.0)
    return RelaxationGap(
        theta=iterate.phi_theta - theta_ij**2,
        v=iterate.phi_v - np.sqrt(uu),
    )


@dataclass(frozen=True, eq=False)
class ExactnessDiagnostic:
    """Per-branch sign test predicting that φθ = θ² and φv = v_i·v_j bind"""

    value: np.ndarray
    positive: np.ndarray
    inconclusive: np.ndarray
    lambda_p: np.ndarray
    lambda_q: np.ndarray
    available: bool = True

    @classmethod
    def unavailable(cls, n_branch: int, n_bus: int) -> "ExactnessDiagnostic":
        return cls(
            value=np.zeros(n_branch),
            positive=np.zeros(n_branch, dtype=bool),
            inconclusive=np.ones(n_branch, dtype=bool),
            lambda_p=np.zeros(n_bus),
            lambda_q=np.zeros(n_bus),
            available=False,
        )


def exactness_condition(
    network: PowerNetwork, problem: SocaProblem, solution: ConicSolution, atol: float = 1e-12
) -> ExactnessDiagnostic:
    """Evaluate the dual sign condition under which the relaxation is exact.

    With marginal prices λ = −y of the balance rows and limit duals z ≥ 0, the
    multiplier of φθ ≥ θ² equals

        −bPloss_ij·λP_i − bPloss_ji·λP_j − gQloss_ij·λQ_i − gQloss_ji·λQ_j
        − Σ_m z_m·(cosψ_m·bPloss + sinψ_m·gQloss)

    summed over both directions; a positive value forces the cone to bind.
    """
    program = problem.program
    if solution.y is None or solution.y.size != program.n_eq:
        return ExactnessDiagnostic.unavailable(network.n_branch, network.n_bus)
    z = solution.z if solution.z is not None and solution.z.size == program.n_ineq else None
    if z is None and program.n_ineq:
        return ExactnessDiagnostic.unavailable(network.n_branch, network.n_bus)

    lam_p = -solution.y[problem.p_balance_rows]
    lam_q = -solution.y[problem.q_balance_rows]
    f, t = network.from_index, network.to_index
    ij, ji = problem.fc_ij, problem.fc_ji
    value = -(ij.bPloss * lam_p[f] + ji.bPloss * lam_p[t] + ij.gQloss * lam_q[f] + ji.gQloss * lam_q[t])

    lim = problem.limits
    if lim.rows.size:
        z_lim = z[lim.rows]
        b_loss = np.where(lim.direction == 0, ij.bPloss[lim.branch], ji.bPloss[lim.branch])
        g_loss = np.where(lim.direction == 0, ij.gQloss[lim.branch], ji.gQloss[lim.branch])
        term = z_lim * (lim.cos * b_loss + lim.sin * g_loss)
        value = value - np.bincount(lim.branch, term, network.n_branch)

    scale = float(max(np.max(np.abs(lam_p), initial=0.0), np.max(np.abs(lam_q), initial=0.0), 1.0))
    inconclusive = np.abs(value) <= atol * scale
    return ExactnessDiagnostic(
        value=value,
        positive=(value > 0.0) & ~inconclusive,
        inconclusive=inconclusive,
        lambda_p=lam_p,
        lambda_q=lam_q,
    )
