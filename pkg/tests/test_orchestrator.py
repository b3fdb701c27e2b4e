import json
import math

import numpy as np
import pytest
from scipy.optimize import minimize

from wind_socopf.core.errors import ConfigurationError
from wind_socopf.core.network import load_case
from wind_socopf.core.powerflow import BranchFlows, VoltageState, bus_injections, exact_branch_flows
from wind_socopf.core.relaxation import OperatingPoint
from wind_socopf.orchestrator import (
    BENCHMARK_COLUMNS,
    OpfStatus,
    Orchestrator,
    SolveOptions,
    convergence_metric,
    load_published_accuracy,
)
from wind_socopf.sessions import WindFarmRequest


def ac_opf_oracle(network) -> float:
    """Exact AC OPF objective by SLSQP over (v, θ, Pg, Qg)"""
    n, ng = network.n_bus, network.n_gen
    free = [i for i in range(n) if i != network.slack_index]
    Pd, Qd = network.bus_array("Pd"), network.bus_array("Qd")

    def unpack(z):
        theta = np.zeros(n)
        theta[free] = z[n : n + len(free)]
        offset = n + len(free)
        return z[:n], theta, z[offset : offset + ng], z[offset + ng :]

    def balance(z):
        v, theta, pg, qg = unpack(z)
        state = VoltageState(v, theta)
        P, Q = bus_injections(network, state, exact_branch_flows(network, state))
        gen_p = np.bincount(network.gen_index, pg, n)
        gen_q = np.bincount(network.gen_index, qg, n)
        return np.concatenate([gen_p - Pd - P, gen_q - Qd - Q])

    bounds = (
        list(zip(network.bus_array("v_min"), network.bus_array("v_max")))
        + [(-math.pi / 3, math.pi / 3)] * len(free)
        + list(zip(network.gen_array("P_min"), network.gen_array("P_max")))
        + list(zip(network.gen_array("Q_min"), network.gen_array("Q_max")))
    )
    z0 = np.concatenate([np.ones(n), np.zeros(len(free)), np.full(ng, Pd.sum() / ng), np.zeros(ng)])
    result = minimize(
        lambda z: network.generation_cost(unpack(z)[2]),
        z0,
        method="SLSQP",
        bounds=bounds,
        constraints=[{"type": "eq", "fun": balance}],
        options={"ftol": 1e-10, "maxiter": 500},
    )
    assert result.success, result.message
    return float(result.fun)


@pytest.fixture
def orchestrator(config):
    orchestrator = Orchestrator(session_id="test-run", config=config)
    yield orchestrator
    orchestrator.close()


@pytest.fixture(scope="module")
def solved_case9(tmp_path_factory, config_factory):
    orchestrator = Orchestrator(session_id="case9-run", config=config_factory(tmp_path_factory.mktemp("case9")))
    try:
        network = orchestrator.load_network("case9")
        yield network, orchestrator.solve_wind_opf(network, SolveOptions())
    finally:
        orchestrator.close()


class TestSolveOptions:
    def test_defaults_from_config(self, config):
        options = SolveOptions.from_config(config, gamma_tolerance=None, max_outer_iterations=4)
        assert options.gamma_tolerance == pytest.approx(1e-3)
        assert options.max_outer_iterations == 4
        assert options.assembly_options.flow_limit_segments == 16

    def test_dc_opf_spelling(self):
        assert SolveOptions(init_mode="dc_opf").init_mode == "dcopf"

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"init_mode": "user"},
            {"init_mode": "random"},
            {"gap_tolerance": 0.0},
            {"damping": 0.0},
            {"max_outer_iterations": 0},
            {"flow_limit_segments": 3},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigurationError):
            SolveOptions(**kwargs)


def flows(P_ij, Q_ij=0.0, P_ji=None, Q_ji=0.0):
    P_ji = -np.asarray(P_ij) if P_ji is None else P_ji
    return BranchFlows(*(np.atleast_1d(np.asarray(a, dtype=float)) for a in (P_ij, Q_ij, P_ji, Q_ji)))


class TestConvergenceMetric:
    def test_identical_flows(self):
        exact = flows([1.0, 0.5], [0.2, -0.1])
        np.testing.assert_array_equal(convergence_metric(exact, exact), 0.0)

    def test_single_branch(self):
        gamma = convergence_metric(flows([1.001], P_ji=[-1.0]), flows([1.0]))
        np.testing.assert_allclose(gamma, [0.001], atol=1e-12)

    def test_scaled_by_largest_exact_flow(self):
        gamma = convergence_metric(flows([0.5, 2.0]), flows([0.4, 2.0]))
        np.testing.assert_allclose(gamma, [0.05, 0.0], atol=1e-12)

    def test_no_load(self):
        zero = flows([0.0, 0.0])
        np.testing.assert_array_equal(convergence_metric(flows([0.1, 0.0]), zero), 0.0)


def test_status_exit_codes():
    assert OpfStatus.CONVERGED.exit_code == 0
    assert OpfStatus.NOT_CONVERGED.exit_code == 1
    assert OpfStatus.INFEASIBLE.exit_code == 3
    assert OpfStatus.SOLVER_FAILURE.exit_code == 3


def test_published_accuracy_table():
    table = load_published_accuracy()
    assert {"case", "load_scale", "method"} <= set(table.columns)
    row = table[(table["case"] == "case14") & (table["method"] == "M2")].iloc[0]
    assert row["objective_error_pct"] == pytest.approx(0.59)


def test_load_network_patches_and_scales(orchestrator):
    network = orchestrator.load_network("case9", load_scale=1.1)
    assert all(br.r > 0.0 for br in network.branches)
    assert network.bus_array("Pd").sum() == pytest.approx(1.1 * 3.15)


def test_empty_benchmark(orchestrator):
    table = orchestrator.run_benchmark([])
    assert table.empty
    assert list(table.columns) == BENCHMARK_COLUMNS


def test_benchmark_reports_bad_case(orchestrator):
    table = orchestrator.run_benchmark(["no_such_case.m"])
    assert table.loc[0, "status"] == "error"
    assert "case file not found" in table.loc[0, "error"]


@pytest.mark.slow
class TestCase9:
    def test_converges(self, solved_case9):
        _, solution = solved_case9
        assert solution.status is OpfStatus.CONVERGED
        assert solution.converged
        assert solution.max_gamma <= 1e-3
        assert solution.trace.records[-1].max_combined_gap < 1e-4

    def test_objective(self, solved_case9):
        _, solution = solved_case9
        assert solution.objective == pytest.approx(5296.69, rel=1e-2)
        assert solution.fossil_cost == pytest.approx(solution.objective)
        assert solution.wind_cost == 0.0

    def test_restoration_and_report(self, solved_case9):
        _, solution = solved_case9
        assert solution.restored is not None and solution.restored.converged
        summary = solution.summary()
        assert summary["objective_error_pct"] < 1.0
        assert summary["max_v_error"] < 0.01
        assert summary["restoration_converged"]

    def test_trace_gamma_recomputes(self, solved_case9):
        network, solution = solved_case9
        for record in solution.trace.records:
            np.testing.assert_allclose(record.recompute_gamma(network), record.gamma, atol=1e-12)

    def test_best_iterate_is_reported(self, solved_case9):
        _, solution = solved_case9
        assert solution.max_gamma == min(r.max_gamma for r in solution.trace.records)

    def test_solution_json(self, solved_case9, tmp_path):
        _, solution = solved_case9
        payload = json.loads(solution.to_json(tmp_path / "solution.json").read_text())
        assert payload["status"] == "converged"
        assert len(payload["v"]) == 9
        assert payload["summary"]["iterations"] == solution.iterations
        trace = json.loads(solution.trace.to_json(tmp_path / "trace.json").read_text())
        assert len(trace["iterations"]) == solution.iterations

    def test_converged_point_is_a_fixed_point(self, solved_case9, orchestrator):
        network, solution = solved_case9
        start = OperatingPoint(solution.state.v, solution.state.theta)
        again = orchestrator.solve_wind_opf(network, SolveOptions(init_mode="user", start=start))
        assert again.converged
        assert again.iterations <= 2
        assert again.objective == pytest.approx(solution.objective, rel=1e-3)


@pytest.mark.slow
def test_case3_matches_ac_opf(orchestrator):
    network = orchestrator.load_network("case3")
    solution = orchestrator.solve_wind_opf(network, SolveOptions())
    optimum = ac_opf_oracle(load_case("case3"))
    assert solution.converged
    assert solution.objective == pytest.approx(optimum, rel=5e-3)
    assert solution.report.objective_exact >= optimum * (1.0 - 1e-3)


@pytest.mark.slow
def test_no_load_converges_immediately(orchestrator):
    network = orchestrator.load_network("case3", load_scale=0.0)
    solution = orchestrator.solve_wind_opf(network, SolveOptions())
    assert solution.converged
    assert solution.iterations == 1
    assert solution.objective == pytest.approx(0.0, abs=1e-4)
    np.testing.assert_allclose(solution.state.theta, 0.0, atol=1e-5)


@pytest.mark.slow
def test_overloaded_case_is_infeasible(orchestrator):
    network = orchestrator.load_network("case3", load_scale=10.0)
    solution = orchestrator.solve_wind_opf(network, SolveOptions())
    assert solution.status is OpfStatus.INFEASIBLE
    assert solution.status.exit_code == 3
    assert solution.iterate is None
    assert "total_cost" not in solution.summary()
    assert solution.dumps


@pytest.mark.slow
def test_dc_opf_start(orchestrator):
    network = orchestrator.load_network("case9")
    solution = orchestrator.solve_wind_opf(network, SolveOptions(init_mode="dcopf"))
    assert solution.converged
    assert solution.objective == pytest.approx(5296.69, rel=1e-2)


@pytest.mark.slow
def test_debug_dumps(orchestrator):
    network = orchestrator.load_network("case3")
    solution = orchestrator.solve_wind_opf(network, SolveOptions(debug_dumps=True))
    assert solution.dumps
    with open(solution.dumps[0]) as f:
        assert f.readline().startswith("# wind-socopf conic program")


@pytest.mark.slow
def test_iteration_cap(orchestrator):
    network = orchestrator.load_network("case14")
    solution = orchestrator.solve_wind_opf(
        network, SolveOptions(max_outer_iterations=1, gamma_tolerance=1e-12)
    )
    assert solution.status is OpfStatus.NOT_CONVERGED
    assert solution.status.exit_code == 1
    assert solution.iterations == 1
    assert solution.iterate is not None
    assert "no convergence" in solution.message


@pytest.mark.slow
def test_wind_farm_dispatch(orchestrator, bimodal_gmm):
    request = WindFarmRequest(bus=5, k_L=60.0, k_H=50.0, power_factor=0.975)
    farm = orchestrator.wind.build_farm(request, bimodal_gmm)
    network = orchestrator.load_network("case9").with_wind_farms((farm,))

    solution = orchestrator.solve_wind_opf(network, SolveOptions())
    assert solution.converged
    (dispatch,) = solution.wind
    assert 0.0 <= dispatch.P_MW <= 100.0 + 1e-6
    assert dispatch.Q_MVAr == pytest.approx(dispatch.P_MW * farm.tan_phi, abs=1e-5)
    assert dispatch.pwl_cost == pytest.approx(float(farm.pwl.evaluate(dispatch.P_MW)), rel=1e-5, abs=1e-3)
    assert dispatch.pwl_cost <= dispatch.analytical_cost + 1e-3
    assert dispatch.analytical_cost - dispatch.pwl_cost <= 1.05 * farm.pwl.max_error + 1e-3

    summary = solution.summary()
    assert summary["fossil_cost_pct"] + summary["wind_cost_pct"] == pytest.approx(100.0)
    assert summary["wind_schedule_MW"] == pytest.approx(dispatch.P_MW)
    assert summary["fossil_cost"] < 5296.69


@pytest.mark.slow
def test_benchmark_case14_with_published_columns(orchestrator):
    table = orchestrator.run_benchmark(["case14"])
    assert list(table.columns[: len(BENCHMARK_COLUMNS)]) == BENCHMARK_COLUMNS
    row = table.iloc[0]
    assert row["status"] == "converged"
    assert row["published_M1_objective_error_pct"] == pytest.approx(6.54)
    assert row["published_M2_max_theta_error"] == pytest.approx(0.031)
    assert row["objective_error_pct"] < 1.0


@pytest.mark.slow
def test_external_case30(orchestrator, external_case):
    network = orchestrator.load_network(external_case("case30"))
    assert orchestrator.solve_wind_opf(network, SolveOptions()).converged
