import enum
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd

from .config import Config
from .core.conic import ConicSolution, SolveStatus
from .core.errors import (
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    EXIT_SOLVER_FAILURE,
    ConfigurationError,
    PowerFlowError,
    SocopfError,
)
from .core.logging import SessionLogger, new_session_id
from .core.network import PowerNetwork, load_case, patch_zero_resistance
from .core.powerflow import (
    BranchFlows,
    ErrorReport,
    PowerFlowSolution,
    VoltageState,
    exact_branch_flows,
    normalized_flow_error,
)
from .core.relaxation import (
    FULL_CIRCLE,
    AssemblyOptions,
    CutSet,
    DeltaState,
    ExactnessDiagnostic,
    IterateValues,
    OperatingPoint,
    SocaProblem,
    dc_opf_initializer,
    extract_iterate,
    generate_rolling_cuts,
    relaxation_gap,
)
from .core.windcost import gmm_cdf, shortage_surplus_cost
from .sessions import PowerFlowSession, RelaxationSession, WindFarmRequest, WindSession


class OpfStatus(str, enum.Enum):
    CONVERGED = "converged"
    NOT_CONVERGED = "not_converged"
    INFEASIBLE = "infeasible"
    SOLVER_FAILURE = "solver_failure"

    @property
    def exit_code(self) -> int:
        if self is OpfStatus.CONVERGED:
            return EXIT_OK
        if self is OpfStatus.NOT_CONVERGED:
            return EXIT_NOT_CONVERGED
        return EXIT_SOLVER_FAILURE


INIT_MODES = ("flat", "dcopf", "user")


@dataclass
class SolveOptions:
    """Settings of one warm-start SOCA-OPF run"""

    init_mode: str = "flat"
    gap_tolerance: float = 1e-4
    gamma_tolerance: float = 1e-3
    max_outer_iterations: int = 10
    max_cut_rounds: int = 8
    flow_limit_segments: int = 16
    flow_limit_arc: tuple[float, float] = FULL_CIRCLE
    initial_cut_slack: float = 1e-2
    slack_underflow: float = 1e-12
    damping: float = 1.0
    solver_tolerance: float = 1e-8
    start: Optional[OperatingPoint] = None
    debug_dumps: bool = False

    def __post_init__(self):
        if self.init_mode == "dc_opf":
            self.init_mode = "dcopf"
        if self.init_mode not in INIT_MODES:
            raise ConfigurationError(f"init_mode must be one of {INIT_MODES} (got {self.init_mode!r})")
        if self.init_mode == "user" and self.start is None:
            raise ConfigurationError("init_mode 'user' needs a start operating point")
        for name in ("gap_tolerance", "gamma_tolerance", "initial_cut_slack", "slack_underflow", "solver_tolerance"):
            value = getattr(self, name)
            if not value > 0:
                raise ConfigurationError(f"{name} must be positive (got {value!r})")
        if self.max_outer_iterations < 1:
            raise ConfigurationError("max_outer_iterations must be at least 1")
        if self.max_cut_rounds < 0:
            raise ConfigurationError("max_cut_rounds must be nonnegative")
        if self.flow_limit_segments < 4:
            raise ConfigurationError("flow_limit_segments must be at least 4")
        if not 0.0 < self.damping <= 1.0:
            raise ConfigurationError(f"damping must lie in (0, 1] (got {self.damping!r})")
        self.flow_limit_arc = tuple(float(a) for a in self.flow_limit_arc)

    @classmethod
    def from_config(cls, config: Config, **overrides: Any) -> "SolveOptions":
        relaxation = config.get("relaxation")
        warm_start = config.get("warm_start")
        values = dict(
            init_mode=warm_start["init_mode"],
            gap_tolerance=relaxation["gap_tolerance"],
            gamma_tolerance=warm_start["gamma_tolerance"],
            max_outer_iterations=warm_start["max_outer_iterations"],
            max_cut_rounds=warm_start["max_cut_rounds"],
            flow_limit_segments=relaxation["flow_limit_segments"],
            flow_limit_arc=tuple(relaxation["flow_limit_arc"]),
            initial_cut_slack=relaxation["initial_cut_slack"],
            slack_underflow=relaxation["slack_underflow"],
            damping=warm_start["damping"],
            solver_tolerance=config.get("solver", "tolerance"),
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    @property
    def assembly_options(self) -> AssemblyOptions:
        return AssemblyOptions(self.flow_limit_segments, self.flow_limit_arc)


@dataclass
class CutRound:
    round: int
    violating: list[int]
    delta_theta: list[float]
    delta_v: list[float]
    objective: float
    seconds: float
    discarded: bool = False


@dataclass
class IterationRecord:
    """One outer iteration: the expansion point and what the solve made of it"""

    iteration: int
    point_v: list[float]
    point_theta: list[float]
    iterate_v: list[float]
    iterate_theta: list[float]
    approx_flows: dict[str, list[float]]
    objective: float
    max_gap_theta: float
    max_gap_v: float
    max_combined_gap: float
    gamma: list[float]
    max_gamma: float
    cut_rounds: list[CutRound] = field(default_factory=list)
    seconds: float = 0.0

    def recompute_gamma(self, network: PowerNetwork) -> np.ndarray:
        """Γ from the stored iterate state and approximate flows"""
        approx = BranchFlows(**{k: np.asarray(v) for k, v in self.approx_flows.items()})
        exact = exact_branch_flows(
            network, VoltageState(np.asarray(self.iterate_v), np.asarray(self.iterate_theta))
        )
        return normalized_flow_error(approx, exact)


@dataclass
class IterationTrace:
    case: str
    records: list[IterationRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def cut_rounds(self) -> int:
        return sum(len(r.cut_rounds) for r in self.records)

    def to_dict(self) -> dict[str, Any]:
        return {"case": self.case, "iterations": [asdict(r) for r in self.records]}

    def to_json(self, path: Path | str) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2))
        return path


@dataclass
class WindDispatch:
    bus: int
    P_MW: float
    Q_MVAr: float
    pwl_cost: float
    analytical_cost: float
    shortage_probability: float
    surplus_probability: float

    @property
    def pwl_gap(self) -> float:
        return self.pwl_cost - self.analytical_cost


def _wind_dispatch(network: PowerNetwork, iterate: IterateValues) -> list[WindDispatch]:
    out = []
    base = network.base_MVA
    for w, farm in enumerate(network.wind_farms):
        P_MW = float(iterate.wind_p[w] * base)
        if farm.gmm is not None:
            cost = float(shortage_surplus_cost(farm.gmm, P_MW, farm.k_L, farm.k_H, farm.gmm.support_max)[2])
            at_schedule = float(gmm_cdf(farm.gmm, P_MW))
            shortage = at_schedule - float(gmm_cdf(farm.gmm, 0.0))
            surplus = float(gmm_cdf(farm.gmm, farm.gmm.support_max)) - at_schedule
        else:
            cost, shortage, surplus = math.nan, math.nan, math.nan
        out.append(
            WindDispatch(
                bus=farm.bus,
                P_MW=P_MW,
                Q_MVAr=float(iterate.wind_q[w] * base),
                pwl_cost=float(iterate.gamma[w]),
                analytical_cost=cost,
                shortage_probability=shortage,
                surplus_probability=surplus,
            )
        )
    return out


def _percent(part: float, total: float) -> float:
    return part / total * 100.0 if total else math.nan


@dataclass(eq=False)
class SocaSolution:
    """Outcome of a warm-start run, usable wherever an approximate dispatch is expected"""

    case: str
    status: OpfStatus
    trace: IterationTrace
    iterate: Optional[IterateValues] = None
    problem: Optional[SocaProblem] = None
    conic: Optional[ConicSolution] = None
    restored: Optional[PowerFlowSolution] = None
    report: Optional[ErrorReport] = None
    exactness: Optional[ExactnessDiagnostic] = None
    exactness_failures: list[int] = field(default_factory=list)
    voltage_anomalies: list[int] = field(default_factory=list)
    wind: list[WindDispatch] = field(default_factory=list)
    dumps: list[str] = field(default_factory=list)
    message: str = ""
    seconds: float = 0.0
    max_gamma: float = math.nan
    base_MVA: float = 100.0

    def _values(self) -> IterateValues:
        if self.iterate is None:
            raise ValueError(f"{self.case}: no primal solution ({self.status.value})")
        return self.iterate

    @property
    def converged(self) -> bool:
        return self.status is OpfStatus.CONVERGED

    @property
    def iterations(self) -> int:
        return len(self.trace)

    @property
    def state(self) -> VoltageState:
        return self._values().state

    @property
    def gen_p(self) -> np.ndarray:
        return self._values().gen_p

    @property
    def gen_q(self) -> np.ndarray:
        return self._values().gen_q

    @property
    def wind_p(self) -> np.ndarray:
        return self._values().wind_p

    @property
    def wind_q(self) -> np.ndarray:
        return self._values().wind_q

    @property
    def flows(self) -> BranchFlows:
        return self._values().flows

    @property
    def objective(self) -> float:
        return self._values().objective

    @property
    def wind_cost(self) -> float:
        return self._values().wind_cost

    @property
    def fossil_cost(self) -> float:
        return self.objective - self.wind_cost

    @property
    def duals(self) -> dict[str, Optional[np.ndarray]]:
        if self.conic is None:
            return {"y": None, "z": None}
        return {"y": self.conic.y, "z": self.conic.z}

    def summary(self) -> dict[str, Any]:
        """Cost split, wind schedule, accuracy and effort in one flat row"""
        out: dict[str, Any] = {
            "case": self.case,
            "status": self.status.value,
            "iterations": self.iterations,
            "cut_rounds": self.trace.cut_rounds,
            "seconds": self.seconds,
        }
        if self.iterate is not None:
            total = self.objective
            out.update(
                total_cost=total,
                fossil_cost=self.fossil_cost,
                fossil_cost_pct=_percent(self.fossil_cost, total),
                wind_cost=self.wind_cost,
                wind_cost_pct=_percent(self.wind_cost, total),
                wind_schedule_MW=float(self.wind_p.sum() * self.base_MVA),
                max_gamma=self.max_gamma,
            )
        if self.report is not None:
            s = self.report.summary
            out.update(
                objective_error_pct=s["objective_error_pct"],
                max_v_error=s["max_v_error"],
                max_theta_error=s["max_theta_error"],
                max_P_flow_error=s["max_P_flow_error"],
                max_Q_flow_error=s["max_Q_flow_error"],
                restoration_converged=s["restoration_converged"],
            )
        return out

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "case": self.case,
            "status": self.status.value,
            "message": self.message,
            "summary": self.summary(),
            "exactness_failures": list(self.exactness_failures),
            "voltage_anomalies": list(self.voltage_anomalies),
            "dumps": list(self.dumps),
            "wind": [dict(asdict(w), pwl_gap=w.pwl_gap) for w in self.wind],
        }
        if self.iterate is not None:
            payload.update(
                gen_p_MW=(self.gen_p * self.base_MVA).tolist(),
                gen_q_MVAr=(self.gen_q * self.base_MVA).tolist(),
                v=self.state.v.tolist(),
                theta=self.state.theta.tolist(),
                phi_v=self.iterate.phi_v.tolist(),
                phi_theta=self.iterate.phi_theta.tolist(),
            )
        if self.exactness is not None and self.exactness.available:
            payload["exactness"] = {
                "value": self.exactness.value.tolist(),
                "positive": self.exactness.positive.tolist(),
                "inconclusive": self.exactness.inconclusive.tolist(),
                "lambda_p": self.exactness.lambda_p.tolist(),
                "lambda_q": self.exactness.lambda_q.tolist(),
            }
        if self.report is not None:
            payload["error_report"] = self.report.summary
        return payload

    def to_json(self, path: Path | str) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, default=float))
        return path


def convergence_metric(approx: BranchFlows, exact: BranchFlows) -> np.ndarray:
    """Per-branch Γ; all-zero exact flows give zeros"""
    return normalized_flow_error(approx, exact)


def _failure_status(solution: ConicSolution) -> OpfStatus:
    if solution.status is SolveStatus.INFEASIBLE:
        return OpfStatus.INFEASIBLE
    return OpfStatus.SOLVER_FAILURE


PUBLISHED_METRICS = ("objective_error_pct", "max_v_error", "max_theta_error", "max_P_flow_error")


def load_published_accuracy() -> pd.DataFrame:
    """Published accuracy of the two comparison methods, keyed by case and load scale"""
    source = resources.files("wind_socopf") / "data" / "published_accuracy.csv"
    with source.open("r") as f:
        return pd.read_csv(f)


def _published_columns(published: pd.DataFrame, case: str, scale: float) -> dict[str, float]:
    rows = published[(published["case"] == case) & np.isclose(published["load_scale"], scale)]
    out: dict[str, float] = {}
    for _, row in rows.iterrows():
        for metric in PUBLISHED_METRICS:
            if pd.notna(row[metric]):
                out[f"published_{row['method']}_{metric}"] = float(row[metric])
    return out


class Orchestrator:
    """Runs the warm-start SOCA-OPF loop across the relaxation, power-flow and wind sessions"""

    def __init__(
        self,
        session_id: Optional[str] = None,
        config: Optional[Config] = None,
        dump_dir: Optional[str] = None,
    ):
        self.session_id = session_id or new_session_id()
        self.config = config or Config()
        log_config = self.config.get("logging")
        self.sessions_dir = os.path.join(os.getcwd(), log_config["log_dir"])
        os.makedirs(self.sessions_dir, exist_ok=True)

        # Initialize session logger
        self.session_logger = SessionLogger(
            self.session_id,
            self.sessions_dir,
            level=log_config["level"],
            fmt=log_config["format"],
            max_size_mb=log_config["max_size_mb"],
            retention=log_config["retention"],
        )
        self.logger = logging.LoggerAdapter(
            self.session_logger.logger, {"prefix": "🎯 orchestrator"}
        )
        self.case_logger = logging.LoggerAdapter(
            self.session_logger.logger, {"prefix": "🗂️ case"}
        )

        # Initialize sessions
        self.relaxation = RelaxationSession(self.session_id, self.config, dump_dir)
        self.powerflow = PowerFlowSession(self.session_id, self.config)
        self.wind = WindSession(self.session_id, self.config)

        # Set loggers for all sessions
        self.relaxation.set_logger(self.session_logger)
        self.powerflow.set_logger(self.session_logger)
        self.wind.set_logger(self.session_logger)

    def load_network(
        self,
        path: str,
        wind: Sequence[WindFarmRequest] = (),
        load_scale: float = 1.0,
    ) -> PowerNetwork:
        """Read a case, patch zero resistances, scale load and attach wind farms"""
        net_config = self.config.get("network")
        network = load_case(
            path,
            default_gencost=net_config["default_gencost"],
            default_angle_bound=net_config["default_angle_bound"],
        )
        for warning in network.warnings:
            self.case_logger.warning(warning)
        network, patched = patch_zero_resistance(network, net_config["zero_resistance_patch"])
        if patched:
            self.case_logger.info(f"{patched} zero-resistance branches patched")
        if load_scale != 1.0:
            network = network.scaled_load(load_scale)
        if wind:
            network = self.wind.attach(network, wind)
        self.case_logger.info(
            f"{network.name}: {network.n_bus} buses, {network.n_branch} branches, "
            f"{network.n_gen} generators, {len(network.wind_farms)} wind farms"
        )
        return network

    def initial_point(self, network: PowerNetwork, options: SolveOptions) -> OperatingPoint:
        if options.init_mode == "user":
            return options.start.project(network)
        if options.init_mode == "dcopf":
            self.logger.info("Warm start from the DC OPF")
            return dc_opf_initializer(network, self.config.get("solver", "cvxpy_solver"))
        return OperatingPoint.flat(network)

    def _cut_loop(
        self,
        network: PowerNetwork,
        point: OperatingPoint,
        problem: SocaProblem,
        solution: ConicSolution,
        options: SolveOptions,
        iteration: int,
        failures: set[int],
    ) -> tuple[SocaProblem, ConicSolution, IterateValues, list[CutRound]]:
        """Tighten the relaxation with rolling cuts until no branch violates the gap test"""
        f, t = network.from_index, network.to_index
        iterate = extract_iterate(problem, solution)
        gap = relaxation_gap(network, iterate)
        delta = DeltaState.initial(network.n_branch, options.initial_cut_slack)
        cuts = CutSet()
        exhausted = np.zeros(network.n_branch, dtype=bool)
        rounds: list[CutRound] = []

        for r in range(1, options.max_cut_rounds + 1):
            violating = gap.violating(options.gap_tolerance) & ~exhausted
            if not violating.any():
                break
            next_cuts, next_delta = generate_rolling_cuts(
                problem.theta_k, point.v[f], point.v[t], violating, delta, cuts
            )
            underflow = next_delta.exhausted(options.slack_underflow) & violating
            if underflow.any():
                exhausted |= underflow
                failures.update(int(k) for k in np.flatnonzero(underflow))
                self.logger.warning(
                    f"Cut slack underflow on branches {np.flatnonzero(underflow).tolist()}"
                )
                violating &= ~underflow
                if not violating.any():
                    break
                next_cuts, next_delta = generate_rolling_cuts(
                    problem.theta_k, point.v[f], point.v[t], violating, delta, cuts
                )

            start = time.perf_counter()
            round_problem, round_solution = self.relaxation.solve_point(
                network, point, next_cuts, options.assembly_options, tag=f"it{iteration}-cut{r}"
            )
            self.session_logger.record_cut_round()
            record = CutRound(
                round=r,
                violating=np.flatnonzero(violating).tolist(),
                delta_theta=next_delta.delta_theta[violating].tolist(),
                delta_v=next_delta.delta_v[violating].tolist(),
                objective=float(round_solution.objective),
                seconds=time.perf_counter() - start,
            )
            rounds.append(record)

            if not round_solution.optimal:
                # keep the previous iterate, the cut was too tight to be feasible
                record.discarded = True
                self.relaxation.dump(round_problem, f"it{iteration}-cut{r}-{round_solution.status.value}")
                failures.update(record.violating)
                self.logger.warning(
                    f"Cut round {r} is {round_solution.status.value}; discarded, "
                    f"branches {record.violating} reported as exactness failures"
                )
                break

            problem, solution = round_problem, round_solution
            cuts, delta = next_cuts, next_delta
            iterate = extract_iterate(problem, solution)
            gap = relaxation_gap(network, iterate)
            self.logger.info(
                f"Cut round {r}: {len(record.violating)} branches cut, "
                f"max gap now {gap.max_combined:.3e}"
            )

        return problem, solution, iterate, rounds

    def solve_wind_opf(self, network: PowerNetwork, options: Optional[SolveOptions] = None) -> SocaSolution:
        """Warm-start SOCA-OPF: expand, solve, cut, re-expand until Γ is small, then restore AC"""
        options = options or SolveOptions.from_config(self.config)
        self.relaxation.tolerance = options.solver_tolerance
        if options.debug_dumps and not self.relaxation.dump_dir:
            self.relaxation.dump_dir = os.path.join(self.sessions_dir, "dumps")
        run_start = time.perf_counter()

        trace = IterationTrace(network.name)
        failures: set[int] = set()
        first_dump = len(self.relaxation.dumps)
        status = OpfStatus.NOT_CONVERGED
        message = ""
        best: Optional[tuple[float, SocaProblem, ConicSolution, IterateValues]] = None

        point = self.initial_point(network, options)
        self.logger.info(f"Solving {network.name} from a {options.init_mode} start")

        for k in range(1, options.max_outer_iterations + 1):
            it_start = time.perf_counter()
            problem, solution = self.relaxation.solve_point(
                network, point, None, options.assembly_options, tag=f"it{k}"
            )
            if not solution.optimal:
                status = _failure_status(solution)
                self.relaxation.dump(problem, f"it{k}-{solution.status.value}")
                message = f"outer iteration {k}: conic solve {solution.status.value} {solution.message}".strip()
                self.logger.error(message)
                break

            problem, solution, iterate, rounds = self._cut_loop(
                network, point, problem, solution, options, k, failures
            )
            gap = relaxation_gap(network, iterate)
            exact = exact_branch_flows(network, iterate.state)
            gamma = convergence_metric(iterate.flows, exact)
            max_gamma = float(np.max(np.abs(gamma), initial=0.0))
            trace.records.append(
                IterationRecord(
                    iteration=k,
                    point_v=point.v.tolist(),
                    point_theta=point.theta.tolist(),
                    iterate_v=iterate.v.tolist(),
                    iterate_theta=iterate.theta.tolist(),
                    approx_flows={name: getattr(iterate.flows, name).tolist() for name in ("P_ij", "Q_ij", "P_ji", "Q_ji")},
                    objective=iterate.objective,
                    max_gap_theta=float(np.max(gap.theta, initial=0.0)),
                    max_gap_v=float(np.max(np.abs(gap.v), initial=0.0)),
                    max_combined_gap=gap.max_combined,
                    gamma=gamma.tolist(),
                    max_gamma=max_gamma,
                    cut_rounds=rounds,
                    seconds=time.perf_counter() - it_start,
                )
            )
            self.logger.info(
                f"Iteration {k}: objective {iterate.objective:.6f}, max |Γ| {max_gamma:.3e}, "
                f"max gap {gap.max_combined:.3e}, {len(rounds)} cut rounds"
            )

            if best is None or max_gamma <= best[0]:
                best = (max_gamma, problem, solution, iterate)
            if max_gamma <= options.gamma_tolerance and not gap.violating(options.gap_tolerance).any():
                status = OpfStatus.CONVERGED
                best = (max_gamma, problem, solution, iterate)
                break
            point = point.towards(iterate.operating_point(), options.damping).project(network)
        else:
            message = f"no convergence within {options.max_outer_iterations} outer iterations"
            self.logger.warning(message)

        result = SocaSolution(
            case=network.name,
            status=status,
            trace=trace,
            exactness_failures=sorted(failures),
            message=message,
            base_MVA=network.base_MVA,
        )
        if best is not None:
            result.max_gamma, result.problem, result.conic, result.iterate = best
            self._finish(network, result, options)
        result.dumps = self.relaxation.dumps[first_dump:]
        result.seconds = time.perf_counter() - run_start
        self.logger.info(
            f"{network.name}: {status.value} after {result.iterations} iterations in {result.seconds:.3f}s"
        )
        self.session_logger.log_run_summary()
        return result

    def _finish(self, network: PowerNetwork, result: SocaSolution, options: SolveOptions) -> None:
        """Voltage checks, exactness diagnostic, wind detail, AC restoration and error report"""
        iterate = result.iterate
        u_floor = network.bus_array("v_min") ** 2 - options.solver_tolerance
        result.voltage_anomalies = [network.buses[i].id for i in np.flatnonzero(iterate.u < u_floor)]
        if result.voltage_anomalies:
            self.logger.warning(f"u below v_min² at buses {result.voltage_anomalies}")

        result.exactness = self.relaxation.exactness(network, result.problem, result.conic)
        result.wind = _wind_dispatch(network, iterate)
        for farm in result.wind:
            self.logger.info(
                f"Wind at bus {farm.bus}: {farm.P_MW:.3f} MW scheduled, PWL cost {farm.pwl_cost:.3f} $/h, "
                f"analytical {farm.analytical_cost:.3f} $/h"
            )

        try:
            result.restored = self.powerflow.restore(network, result)
        except PowerFlowError as e:
            result.message = "; ".join(filter(None, [result.message, f"AC restoration failed: {e}"]))
            return
        result.report = self.powerflow.report(network, result, result.restored)

    def run_benchmark(
        self,
        cases: Sequence[str],
        options: Optional[SolveOptions] = None,
        load_scales: Optional[Sequence[float]] = None,
        workers: int = 1,
    ) -> pd.DataFrame:
        """One row per (case, load scale) with accuracy, effort and the published figures"""
        options = options or SolveOptions.from_config(self.config)
        jobs = [(case, float(scale)) for case in cases for scale in (load_scales or [1.0])]
        if workers > 1 and len(jobs) > 1:
            self.logger.info(f"Benchmark of {len(jobs)} runs on {workers} workers")
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [
                    pool.submit(_benchmark_worker, case, scale, options, self.config, f"{self.session_id}-{n}")
                    for n, (case, scale) in enumerate(jobs)
                ]
                rows = [future.result() for future in futures]
        else:
            rows = [self.benchmark_row(case, scale, options) for case, scale in jobs]

        if not rows:
            return pd.DataFrame(columns=BENCHMARK_COLUMNS)
        frame = pd.DataFrame(rows)
        extra = [c for c in frame.columns if c not in BENCHMARK_COLUMNS]
        return frame.reindex(columns=BENCHMARK_COLUMNS + extra)

    def benchmark_row(self, case: str, load_scale: float, options: SolveOptions) -> dict[str, Any]:
        stem = os.path.splitext(os.path.basename(case))[0]
        row: dict[str, Any] = {"case": stem, "load_scale": load_scale}
        try:
            network = self.load_network(case, load_scale=load_scale)
            solution = self.solve_wind_opf(network, options)
        except SocopfError as e:
            self.logger.error(f"Benchmark {stem}@{load_scale:g} failed: {e}")
            row.update(status="error", error=str(e))
        else:
            summary = solution.summary()
            row.update({k: summary.get(k, math.nan) for k in BENCHMARK_COLUMNS if k not in row})
            row["error"] = solution.message if not solution.converged else ""
        row.update(_published_columns(load_published_accuracy(), stem, load_scale))
        return row

    def close(self) -> None:
        self.session_logger.close()


BENCHMARK_COLUMNS = [
    "case",
    "load_scale",
    "status",
    "objective_error_pct",
    "max_v_error",
    "max_theta_error",
    "max_P_flow_error",
    "max_gamma",
    "iterations",
    "cut_rounds",
    "seconds",
    "error",
]


def _benchmark_worker(
    case: str, load_scale: float, options: SolveOptions, config: Config, session_id: str
) -> dict[str, Any]:
    orchestrator = Orchestrator(session_id, config)
    try:
        return orchestrator.benchmark_row(case, load_scale, options)
    finally:
        orchestrator.close()


def solve_wind_opf(
    network: PowerNetwork,
    options: Optional[SolveOptions] = None,
    config: Optional[Config] = None,
) -> SocaSolution:
    orchestrator = Orchestrator(config=config)
    try:
        return orchestrator.solve_wind_opf(network, options)
    finally:
        orchestrator.close()
