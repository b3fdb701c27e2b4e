import re

import numpy as np
import pytest

from wind_socopf.core.errors import ConfigurationError, WindDataError
from wind_socopf.core.logging import new_session_id
from wind_socopf.core.network import PowerNetwork
from wind_socopf.core.relaxation import OperatingPoint
from wind_socopf.sessions import PowerFlowSession, RelaxationSession, WindFarmRequest, WindSession, parse_wind_spec


class TestParseWindSpec:
    def test_defaults_from_config(self, config):
        request = parse_wind_spec("bus=5,gmm=farm.json", config)
        assert request == WindFarmRequest(bus=5, k_L=60.0, k_H=50.0, power_factor=0.975, gmm_path="farm.json")

    def test_all_fields(self):
        request = parse_wind_spec(" bus=3, KL=40, kh=20.5, pf=0.98, data=w.csv, cap=80, pmin=5 ")
        assert request.bus == 3
        assert (request.k_L, request.k_H, request.power_factor) == (40.0, 20.5, 0.98)
        assert request.data_path == "w.csv" and request.gmm_path is None
        assert (request.P_min, request.P_max) == (5.0, 80.0)

    def test_pmax_alias(self):
        assert parse_wind_spec("bus=3,gmm=g.json,pmax=70").P_max == 70.0

    def test_segments(self):
        assert parse_wind_spec("bus=3,gmm=g.json,segments=8").pwl_segments == 8
        assert parse_wind_spec("bus=3,gmm=g.json").pwl_segments is None

    @pytest.mark.parametrize(
        "text, match",
        [
            ("kl=60,gmm=g.json", "needs bus"),
            ("bus=3", "exactly one"),
            ("bus=3,gmm=g.json,data=w.csv", "exactly one"),
            ("bus=3,gmm=g.json,speed=9", "bad wind farm field"),
            ("bus=3,gmm", "bad wind farm field"),
            ("bus=three,gmm=g.json", "wind farm spec"),
            ("bus=3,gmm=g.json,segments=2.5", "wind farm spec"),
        ],
    )
    def test_rejects(self, text, match):
        with pytest.raises(ConfigurationError, match=match):
            parse_wind_spec(text)


class TestWindSession:
    @pytest.fixture
    def session(self, config_factory, tmp_path):
        config = config_factory(tmp_path, wind={"components": 2})
        return WindSession("wind-test", config, base_dir=str(tmp_path / "artifacts"))

    def test_cost_curves_without_coefficients(self, session, bimodal_gmm):
        frame = session.cost_curves(bimodal_gmm, [], [50.0])
        assert frame.empty
        assert list(frame.columns) == ["k_L", "k_H", "P_schedule", "F_L", "F_H", "total"]

    def test_cost_curves_grid(self, session, bimodal_gmm):
        frame = session.cost_curves(bimodal_gmm, [40.0, 60.0], [30.0, 50.0], points=5)
        assert len(frame) == 20
        assert frame.groupby(["k_L", "k_H"]).size().tolist() == [5, 5, 5, 5]

    def test_fit_counts_and_saves(self, session, wind_samples, tmp_path):
        fit = session.fit(wind_samples, K=2, support_max=120.0)
        assert fit.model.K == 2
        assert fit.model.support_max == 120.0
        path = session.save_model(fit.model, "models/gmm.json")
        assert path.startswith(str(tmp_path / "artifacts"))
        loaded = session.load_model(path)
        np.testing.assert_allclose(loaded.means, fit.model.means)
        assert session.stats()["gmm_fits"] == 1

    def test_fit_from_csv(self, session, tmp_path, wind_samples):
        path = tmp_path / "wind.csv"
        np.savetxt(path, wind_samples[:500])
        assert session.fit(str(path), K=1).model.K == 1

    def test_fit_too_few_samples(self, session):
        with pytest.raises(WindDataError):
            session.fit(np.linspace(0.0, 10.0, 15), K=2)

    def test_build_farm_clips_to_support(self, session, bimodal_gmm):
        request = WindFarmRequest(bus=5, k_L=60.0, k_H=50.0, power_factor=0.95, P_max=150.0)
        farm = session.build_farm(request, bimodal_gmm)
        assert farm.P_wind_max == 100.0
        assert farm.pwl.segments == 20
        assert farm.tan_phi == pytest.approx(np.sqrt(1 - 0.95**2) / 0.95)
        assert session.stats()["wind_farms"] == 1

    def test_build_farm_uses_requested_segments(self, session, bimodal_gmm):
        request = WindFarmRequest(bus=5, k_L=60.0, k_H=50.0, power_factor=1.0, pwl_segments=6)
        farm = session.build_farm(request, bimodal_gmm)
        assert farm.pwl_segments == 6
        assert farm.pwl.segments == 6

    def test_build_farm_segments_default_from_config(self, session, bimodal_gmm):
        request = WindFarmRequest(bus=5, k_L=60.0, k_H=50.0, power_factor=1.0)
        farm = session.build_farm(request, bimodal_gmm)
        assert farm.pwl_segments == session.wind_config["pwl_segments"] == farm.pwl.segments

    def test_build_farm_from_samples(self, session, tmp_path, wind_samples):
        path = tmp_path / "wind.csv"
        np.savetxt(path, wind_samples)
        request = WindFarmRequest(bus=5, k_L=60.0, k_H=50.0, power_factor=1.0, data_path=str(path), P_max=110.0)
        farm = session.build_farm(request)
        assert farm.P_wind_max == 110.0
        assert farm.tan_phi == pytest.approx(0.0)

    def test_attach(self, session, case9, bimodal_gmm, tmp_path):
        gmm_path = session.save_model(bimodal_gmm, str(tmp_path / "farm.json"))
        request = WindFarmRequest(bus=7, k_L=60.0, k_H=50.0, power_factor=0.975, gmm_path=gmm_path)
        network = session.attach(case9, [request])
        assert isinstance(network, PowerNetwork)
        assert [w.bus for w in network.wind_farms] == [7]
        assert case9.wind_farms == ()


def test_relaxation_session_dumps(config, case3, tmp_path):
    session = RelaxationSession("relax-test", config, dump_dir=str(tmp_path / "dumps"))
    problem, solution = session.solve_point(case3, OperatingPoint.flat(case3), tag="flat")
    assert solution.optimal
    assert len(session.dumps) == 1
    assert session.dumps[0].endswith("relax-test-flat.txt")
    assert session.stats()["conic_solves"] == 1


def test_powerflow_session_newton(config, case9):
    session = PowerFlowSession("pf-test", config)
    result = session.run_newton(case9)
    assert result.converged
    assert session.stats()["newton_iterations"] == result.iterations


def test_sessions_share_a_generated_id(config):
    session = WindSession(config=config)
    assert re.fullmatch(r"\d{8}-\d{6}-[0-9a-f]{6}", session.session_id)
    assert new_session_id() != new_session_id()
