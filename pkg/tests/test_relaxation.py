import math
from types import SimpleNamespace

import numpy as np
import pytest

from wind_socopf.core.conic import CvxpyEngine
from wind_socopf.core.errors import ConfigurationError
from wind_socopf.core.network import WindFarmSpec
from wind_socopf.core.powerflow import BranchFlows, VoltageState, exact_branch_flows, newton_raphson
from wind_socopf.core.relaxation import (
    AssemblyOptions,
    DeltaState,
    IterateValues,
    OperatingPoint,
    approx_branch_flow,
    assemble_soca_problem,
    dc_opf_initializer,
    exactness_condition,
    extract_iterate,
    flow_coefficients,
    generate_rolling_cuts,
    linearize_flow_limits,
    relaxation_gap,
    taylor_coefficients,
    tangent_angles,
)
from wind_socopf.core.windcost import build_pwl


@pytest.fixture
def engine():
    engine = CvxpyEngine()
    if not engine.available():
        pytest.skip("Clarabel not installed")
    return engine


def exact_vector(problem, network, pf) -> np.ndarray:
    """Program variables filled from an AC power flow solution"""
    idx = problem.index
    f, t = network.from_index, network.to_index
    x = np.zeros(problem.program.n)
    x[idx.Pg] = pf.gen_p
    x[idx.Qg] = pf.gen_q
    x[idx.u] = pf.state.v**2
    x[idx.theta] = pf.state.theta
    x[idx.phi_v] = pf.state.v[f] * pf.state.v[t]
    x[idx.phi_theta] = (pf.state.theta[f] - pf.state.theta[t]) ** 2
    x[idx.P_ij] = pf.flows.P_ij
    x[idx.Q_ij] = pf.flows.Q_ij
    x[idx.P_ji] = pf.flows.P_ji
    x[idx.Q_ji] = pf.flows.Q_ji
    return x


class TestTaylor:
    @pytest.mark.parametrize("theta_k", [-1.2, -0.3, 0.0, 0.05, 0.7, 1.4])
    def test_matches_value_and_slope(self, theta_k):
        tc = taylor_coefficients(theta_k)
        assert tc.sin(theta_k) == pytest.approx(math.sin(theta_k), abs=1e-12)
        assert tc.cos(theta_k) == pytest.approx(math.cos(theta_k), abs=1e-12)
        assert tc.alpha1 == pytest.approx(math.cos(theta_k))
        assert 2 * tc.beta2 * theta_k + tc.beta1 == pytest.approx(-math.sin(theta_k), abs=1e-12)

    def test_tangency_over_random_angles(self):
        theta_k = np.random.default_rng(17).uniform(-0.9999, 0.9999, 1000) * (np.pi / 2)
        tc = taylor_coefficients(theta_k)
        assert np.max(np.abs(tc.sin(theta_k) - np.sin(theta_k))) <= 1e-12
        assert np.max(np.abs(tc.cos(theta_k) - np.cos(theta_k))) <= 1e-12
        assert np.max(np.abs(tc.alpha1 - np.cos(theta_k))) <= 1e-12
        assert np.max(np.abs(2 * tc.beta2 * theta_k + tc.beta1 + np.sin(theta_k))) <= 1e-12

    def test_error_shrinks_with_offset(self):
        theta_k = 0.4
        tc = taylor_coefficients(theta_k)
        steps = [0.1, 0.05, 0.025, 0.0125]
        cos_err = [abs(tc.cos(theta_k + h) - math.cos(theta_k + h)) for h in steps]
        sin_err = [abs(tc.sin(theta_k + h) - math.sin(theta_k + h)) for h in steps]
        # halving the offset cuts the error by 2³ for cos and 2² for sin
        for coarse, fine in zip(cos_err, cos_err[1:]):
            assert coarse / fine == pytest.approx(8.0, rel=0.1)
        for coarse, fine in zip(sin_err, sin_err[1:]):
            assert coarse / fine == pytest.approx(4.0, rel=0.1)

    def test_vectorized(self):
        theta_k = np.random.default_rng(1).uniform(-1.0, 1.0, 50)
        tc = taylor_coefficients(theta_k)
        np.testing.assert_allclose(tc.sin(theta_k), np.sin(theta_k), atol=1e-12)
        np.testing.assert_allclose(tc.cos(theta_k), np.cos(theta_k), atol=1e-12)

    @pytest.mark.parametrize("theta_k", [math.pi / 2, -2.0])
    def test_rejects_quarter_turn(self, theta_k):
        with pytest.raises(ValueError):
            taylor_coefficients(theta_k)


class TestFlowCoefficients:
    def test_exact_at_expansion_point(self, case14):
        rng = np.random.default_rng(2)
        state = VoltageState(rng.uniform(0.94, 1.06, case14.n_bus), rng.uniform(-0.3, 0.3, case14.n_bus))
        f, t = case14.from_index, case14.to_index
        c = case14.coefficients
        vi, vj = state.v[f], state.v[t]
        theta_k = state.theta[f] - state.theta[t]
        fc_ij, fc_ji = flow_coefficients(c, theta_k, vi, vj)

        P_ij, Q_ij = approx_branch_flow(fc_ij, c.g_f, c.b_f, vi**2, vi * vj, theta_k, theta_k**2, theta_k)
        P_ji, Q_ji = approx_branch_flow(fc_ji, c.g_t, c.b_t, vj**2, vi * vj, -theta_k, theta_k**2, -theta_k)

        exact = exact_branch_flows(case14, state)
        np.testing.assert_allclose(P_ij, exact.P_ij, atol=1e-12)
        np.testing.assert_allclose(Q_ij, exact.Q_ij, atol=1e-12)
        np.testing.assert_allclose(P_ji, exact.P_ji, atol=1e-12)
        np.testing.assert_allclose(Q_ji, exact.Q_ji, atol=1e-12)

    def test_closed_forms_over_random_angles(self):
        rng = np.random.default_rng(23)
        n = 1000
        theta_k = rng.uniform(-0.9999, 0.9999, n) * (np.pi / 2)
        coeffs = SimpleNamespace(
            g_c_ij=rng.uniform(0.0, 10.0, n),
            b_c_ij=rng.uniform(-40.0, 0.0, n),
            g_c_ji=rng.uniform(0.0, 10.0, n),
            b_c_ji=rng.uniform(-40.0, 0.0, n),
        )
        v_i, v_j = rng.uniform(0.9, 1.1, n), rng.uniform(0.9, 1.1, n)
        vv = v_i * v_j
        fc_ij, fc_ji = flow_coefficients(coeffs, theta_k, v_i, v_j)
        directions = (
            (fc_ij, coeffs.g_c_ij, coeffs.b_c_ij, theta_k),
            (fc_ji, coeffs.g_c_ji, coeffs.b_c_ji, -theta_k),
        )
        for fc, g, b, th in directions:
            c, s = np.cos(th), np.sin(th)
            slope = th * c - s
            expected = {
                "gP": g * c + b * s,
                "bP": (g * slope + b * c) * vv,
                "bQ": b * c - g * s,
                "gQ": (g * c - b * slope) * vv,
                "bPloss": -0.5 * g * c * vv,
                "gQloss": 0.5 * b * c * vv,
            }
            for name, value in expected.items():
                scale = np.maximum(1.0, np.abs(value))
                assert np.max(np.abs(getattr(fc, name) - value) / scale) <= 1e-12, name

    def test_flat_start_values(self):
        coeffs = SimpleNamespace(g_c_ij=2.0, b_c_ij=-8.0, g_c_ji=2.5, b_c_ji=-7.0)
        fc_ij, _ = flow_coefficients(coeffs, 0.0, 1.0, 1.0)
        assert (fc_ij.gP, fc_ij.bP, fc_ij.bQ, fc_ij.gQ) == pytest.approx((2.0, -8.0, -8.0, 2.0))
        assert fc_ij.bPloss == pytest.approx(-1.0)
        assert fc_ij.gQloss == pytest.approx(-4.0)

    def test_rejects_nonpositive_voltage(self, case9):
        with pytest.raises(ValueError):
            flow_coefficients(case9.coefficients, np.zeros(9), np.zeros(9), np.ones(9))


class TestLimits:
    def test_full_circle_angles(self):
        np.testing.assert_allclose(tangent_angles(4), [0.0, math.pi / 2, math.pi, 3 * math.pi / 2])

    def test_partial_arc_includes_ends(self):
        angles = tangent_angles(5, (0.0, math.pi / 2))
        assert angles[0] == 0.0
        assert angles[-1] == pytest.approx(math.pi / 2)

    def test_rows_are_an_outer_polygon(self):
        rows = linearize_flow_limits(2.0, M=16)
        assert len(rows) == 16
        for phi in np.linspace(0.0, 2 * math.pi, 97):
            P, Q = 2.0 * math.cos(phi), 2.0 * math.sin(phi)
            assert all(c * P + s * Q <= limit + 1e-12 for c, s, limit in rows)

    def test_unlimited_branch_has_no_rows(self):
        assert linearize_flow_limits(0.0) == []
        assert linearize_flow_limits(math.inf) == []

    def test_too_few_segments(self):
        with pytest.raises(ValueError):
            tangent_angles(3)


class TestCuts:
    def test_halving_only_violating(self):
        delta = DeltaState.initial(3).halved(np.array([True, False, True]))
        np.testing.assert_allclose(delta.delta_theta, [5e-3, 1e-2, 5e-3])
        np.testing.assert_allclose(delta.delta_v, [5e-3, 1e-2, 5e-3])

    def test_exhausted(self):
        delta = DeltaState(np.array([1e-13, 1e-3]), np.array([1e-3, 1e-3]))
        np.testing.assert_array_equal(delta.exhausted(1e-12), [True, False])

    def test_cuts_roll_per_branch(self):
        theta_k = np.array([0.1, -0.2, 0.05])
        v = np.array([1.0, 1.02, 0.98])
        delta = DeltaState.initial(3)
        cuts, delta = generate_rolling_cuts(theta_k, v, v, np.array([True, False, False]), delta)
        assert len(cuts) == 1 and 0 in cuts
        assert cuts.cuts[0].delta_theta == pytest.approx(5e-3)

        theta_k = np.array([0.12, -0.2, 0.05])
        cuts, delta = generate_rolling_cuts(theta_k, v, v, np.array([True, True, False]), delta, cuts)
        assert sorted(cuts.cuts) == [0, 1]
        assert cuts.cuts[0].theta_k == pytest.approx(0.12)
        assert cuts.cuts[0].delta_theta == pytest.approx(2.5e-3)
        assert cuts.cuts[1].delta_v == pytest.approx(5e-3)

    def test_cut_rows_tight_at_expansion_point(self):
        theta_k = np.array([0.3])
        cuts, _ = generate_rolling_cuts(
            theta_k, np.array([1.05]), np.array([0.97]), np.array([True]), DeltaState.initial(1)
        )
        cut = cuts.cuts[0]
        slope, rhs = cut.theta_row()
        # φθ = θk² at θ = θk
        assert 0.3**2 - slope * 0.3 == pytest.approx(rhs - cut.delta_theta)
        a_i, a_j, rhs = cut.voltage_row()
        assert a_i * 1.05**2 + a_j * 0.97**2 - 1.05 * 0.97 == pytest.approx(rhs - cut.delta_v)

    def test_rejects_nonpositive_voltage(self):
        with pytest.raises(ValueError):
            generate_rolling_cuts(
                np.zeros(1), np.zeros(1), np.ones(1), np.array([True]), DeltaState.initial(1)
            )


class TestOperatingPoint:
    def test_project_clips_and_shifts(self, case9):
        point = OperatingPoint(np.full(9, 1.3), np.full(9, 0.2)).project(case9)
        np.testing.assert_allclose(point.v, case9.bus_array("v_max"))
        np.testing.assert_allclose(point.theta, 0.0)

    def test_towards(self, case3):
        a = OperatingPoint.flat(case3)
        b = OperatingPoint(np.full(3, 1.1), np.array([0.0, 0.2, -0.2]))
        half = a.towards(b, 0.5)
        np.testing.assert_allclose(half.v, 1.05)
        np.testing.assert_allclose(half.theta, [0.0, 0.1, -0.1])

    def test_branch_angles_clipped_to_bounds(self, case3):
        point = OperatingPoint(np.ones(3), np.array([0.0, -2.0, 0.0]))
        angles = point.branch_angles(case3)
        assert np.all(np.abs(angles) <= math.pi / 3 + 1e-12)

    def test_shape_mismatch(self, case9):
        with pytest.raises(ValueError):
            OperatingPoint(np.ones(3), np.zeros(3)).project(case9)


class TestAssembly:
    def test_dimensions(self, case9):
        problem = assemble_soca_problem(case9, OperatingPoint.flat(case9))
        program = problem.program
        assert program.n == 2 * 3 + 2 * 9 + 6 * 9
        assert program.n_eq == 2 * 9 + 4 * 9
        assert program.n_ineq == 2 * 9 + 2 * 9 * 16
        assert len(program.cones) == 2 * 9
        assert problem.limits.rows.size == 2 * 9 * 16
        slack = problem.index.theta[case9.slack_index]
        assert program.lb[slack] == program.ub[slack] == 0.0

    def test_fewer_limit_segments(self, case9):
        problem = assemble_soca_problem(case9, OperatingPoint.flat(case9), options=AssemblyOptions(8))
        assert problem.limits.rows.size == 2 * 9 * 8

    def test_labels(self, case9):
        program = assemble_soca_problem(case9, OperatingPoint.flat(case9)).program
        assert program.eq_labels[0] == "P_balance[1]"
        assert "P_ij[1-4]" in program.eq_labels
        assert "Q_ji[8-9]" in program.eq_labels

    def test_power_flow_solution_satisfies_rows_at_its_own_point(self, case9):
        pf = newton_raphson(case9)
        point = OperatingPoint(pf.state.v, pf.state.theta)
        problem = assemble_soca_problem(case9, point)
        x = exact_vector(problem, case9, pf)
        program = problem.program
        np.testing.assert_allclose(program.A @ x - program.b, 0.0, atol=1e-7)
        for block in program.cones:
            head, *tail = block.rows @ x + block.offset
            assert np.linalg.norm(tail) <= head + 1e-9

    def test_lifted_exact_points_satisfy_cones(self, case14):
        problem = assemble_soca_problem(case14, OperatingPoint.flat(case14))
        idx = problem.index
        f, t = case14.from_index, case14.to_index
        rng = np.random.default_rng(5)
        for _ in range(20):
            v = rng.uniform(0.9, 1.1, case14.n_bus)
            theta = rng.uniform(-0.5, 0.5, case14.n_bus)
            x = np.zeros(problem.program.n)
            x[idx.u] = v**2
            x[idx.theta] = theta
            x[idx.phi_v] = v[f] * v[t]
            x[idx.phi_theta] = (theta[f] - theta[t]) ** 2
            for block in problem.program.cones:
                head, *tail = block.rows @ x + block.offset
                # lifting is exact, so every cone is tight
                assert np.linalg.norm(tail) == pytest.approx(head, rel=1e-12, abs=1e-12)

    def test_cut_rows(self, case9):
        cuts, _ = generate_rolling_cuts(
            np.zeros(9), np.ones(9), np.ones(9), np.eye(9, dtype=bool)[2], DeltaState.initial(9)
        )
        problem = assemble_soca_problem(case9, OperatingPoint.flat(case9), cuts)
        assert list(problem.cut_rows) == [2]
        assert problem.program.n_ineq == 2 * 9 + 2 * 9 * 16 + 2
        assert problem.program.ineq_labels[problem.cut_rows[2][0]] == "cut_theta[2]"

    def test_cut_outside_network(self, case3):
        cuts, _ = generate_rolling_cuts(
            np.zeros(5), np.ones(5), np.ones(5), np.eye(5, dtype=bool)[4], DeltaState.initial(5)
        )
        with pytest.raises(ValueError, match="outside"):
            assemble_soca_problem(case3, OperatingPoint.flat(case3), cuts)

    def test_wind_farm_rows(self, case9):
        pwl = build_pwl(lambda p: 0.01 * (np.asarray(p) - 30.0) ** 2, 0.0, 80.0, L=6)
        farm = WindFarmSpec(bus=5, P_wind_min=0.0, P_wind_max=80.0, power_factor=0.975, k_L=60, k_H=50, pwl=pwl)
        network = case9.with_wind_farms((farm,))
        problem = assemble_soca_problem(network, OperatingPoint.flat(network))
        base = assemble_soca_problem(case9, OperatingPoint.flat(case9)).program
        assert problem.program.n == base.n + 3
        assert problem.program.n_eq == base.n_eq + 1
        assert problem.program.n_ineq == base.n_ineq + 6
        assert problem.program.ub[problem.index.P_w[0]] == pytest.approx(0.8)
        assert problem.program.q[problem.index.gamma[0]] == 1.0

    def test_wind_farm_without_pwl(self, case9):
        farm = WindFarmSpec(bus=5, P_wind_min=0.0, P_wind_max=80.0, power_factor=1.0, k_L=60, k_H=50)
        network = case9.with_wind_farms((farm,))
        with pytest.raises(ConfigurationError, match="PWL"):
            assemble_soca_problem(network, OperatingPoint.flat(network))


class TestGap:
    def test_arithmetic(self, case3):
        zeros = np.zeros(3)
        iterate = IterateValues(
            gen_p=np.zeros(2),
            gen_q=np.zeros(2),
            u=np.array([1.0, 1.21, 0.81]),
            theta=np.array([0.0, -0.1, 0.2]),
            phi_v=np.array([1.0, 0.85, 0.99]),
            phi_theta=np.array([0.02, 0.05, 0.09]),
            flows=BranchFlows(zeros, zeros, zeros, zeros),
            wind_p=np.zeros(0),
            wind_q=np.zeros(0),
            gamma=np.zeros(0),
            objective=0.0,
        )
        gap = relaxation_gap(case3, iterate)
        # branches 1-2, 1-3, 2-3
        np.testing.assert_allclose(gap.theta, [0.02 - 0.01, 0.05 - 0.04, 0.09 - 0.09])
        np.testing.assert_allclose(gap.v, [1.0 - 1.1, 0.85 - 0.9, 0.99 - 0.99], atol=1e-12)
        np.testing.assert_allclose(gap.combined, [0.11, 0.06, 0.0], atol=1e-12)
        np.testing.assert_array_equal(gap.violating(0.05), [True, True, False])
        assert gap.max_combined == pytest.approx(0.11)


def test_solve_flat_point(case9, engine):
    problem = assemble_soca_problem(case9, OperatingPoint.flat(case9))
    solution = engine.solve(problem.program)
    assert solution.optimal
    iterate = extract_iterate(problem, solution)
    gap = relaxation_gap(case9, iterate)
    assert np.all(gap.theta >= -1e-6)
    assert np.all(gap.v <= 1e-6)
    assert np.all(iterate.v >= case9.bus_array("v_min") - 1e-6)
    assert iterate.theta[case9.slack_index] == pytest.approx(0.0, abs=1e-9)

    diagnostic = exactness_condition(case9, problem, solution)
    assert diagnostic.available
    assert diagnostic.value.shape == (9,)
    assert diagnostic.lambda_p.shape == (9,)


def test_dc_opf_initializer(case9):
    point = dc_opf_initializer(case9)
    np.testing.assert_allclose(point.v, 1.0)
    assert point.theta[case9.slack_index] == 0.0
    assert np.max(np.abs(point.theta)) > 1e-3
    f, t = case9.from_index, case9.to_index
    assert np.all(np.abs(point.theta[f] - point.theta[t]) <= math.pi / 3 + 1e-6)


def test_dc_opf_without_load_is_flat(case3):
    point = dc_opf_initializer(case3.scaled_load(0.0))
    np.testing.assert_allclose(point.theta, 0.0, atol=1e-6)
