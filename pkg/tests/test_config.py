import pytest

from wind_socopf.config import Config
from wind_socopf.core.errors import ConfigurationError


def test_defaults():
    config = Config()
    assert config.get("solver", "backend") == "cvxpy"
    assert config.get("warm_start", "init_mode") == "flat"
    assert config.get("relaxation", "initial_cut_slack") == pytest.approx(1e-2)
    assert config.get("wind", "pwl_segments") == 20


def test_missing_file_keeps_defaults(tmp_path):
    config = Config(str(tmp_path / "missing.yaml"))
    assert config.get("powerflow", "max_iterations") == 30


def test_yaml_overrides_merge_per_key(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("warm_start:\n  gamma_tolerance: 0.01\nwind:\n  k_L: 75\n")
    config = Config(str(path))
    assert config.get("warm_start", "gamma_tolerance") == pytest.approx(0.01)
    assert config.get("warm_start", "max_outer_iterations") == 10
    assert config.get("wind", "k_L") == 75
    assert config.get("wind", "k_H") == 50.0


def test_overrides_applied_after_file(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("solver:\n  tolerance: 1.0e-6\n")
    config = Config(str(path), {"solver": {"tolerance": 1e-9}})
    assert config.get("solver", "tolerance") == pytest.approx(1e-9)


def test_malformed_yaml(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("solver: [unclosed\n")
    with pytest.raises(ConfigurationError):
        Config(str(path))


@pytest.mark.parametrize(
    "overrides",
    [
        {"relaxation": {"gap_tolerance": 0.0}},
        {"warm_start": {"damping": 1.5}},
        {"warm_start": {"init_mode": "random"}},
        {"relaxation": {"flow_limit_segments": 2}},
        {"relaxation": {"flow_limit_arc": [1.0, -1.0]}},
        {"wind": {"power_factor": 0.8}},
        {"output": {"format": "xml"}},
        {"solver": "CLARABEL"},
    ],
)
def test_invalid_values_rejected(overrides):
    with pytest.raises(ConfigurationError):
        Config(overrides=overrides)
