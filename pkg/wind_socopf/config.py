import copy
import math
import os
import yaml
from typing import Any, Optional
from dotenv import load_dotenv

from .core.errors import ConfigurationError

# Load environment variables from .env file
load_dotenv()

DEFAULT_CONFIG = {
    "network": {
        "zero_resistance_patch": 1e-4,
        "default_angle_bound": math.pi / 3,
        "default_gencost": {"c2": 0.01, "c1": 40.0, "c0": 0.0},
    },

    "solver": {
        "backend": "cvxpy",
        "cvxpy_solver": "CLARABEL",
        "tolerance": 1e-8,
        "max_iterations": 200,
    },

    "relaxation": {
        "gap_tolerance": 1e-4,
        "initial_cut_slack": 1e-2,
        "slack_underflow": 1e-12,
        "flow_limit_segments": 16,
        "flow_limit_arc": [-math.pi, math.pi],
    },

    "warm_start": {
        "init_mode": "flat",
        "gamma_tolerance": 1e-3,
        "max_outer_iterations": 10,
        "max_cut_rounds": 8,
        "damping": 1.0,
    },

    "powerflow": {
        "tolerance": 1e-8,
        "max_iterations": 30,
        "q_limit_tolerance": 1e-6,
    },

    "wind": {
        "components": 12,
        "em_max_iter": 500,
        "em_tol": 1e-8,
        "seed": 0,
        "pwl_segments": 20,
        "grid_points": 2001,
        "k_L": 60.0,
        "k_H": 50.0,
        "power_factor": 0.975,
    },

    "logging": {
        "level": "INFO",
        "format": "%(asctime)s - %(name)s - %(levelname)s - %(prefix)s - %(message)s",
        "retention": 5,
        "max_size_mb": 1,
        "log_dir": os.getenv("SOCOPF_LOG_DIR", ".solve_logs"),
    },

    "output": {
        "dir": os.getenv("SOCOPF_OUT_DIR", "results"),
        "format": "json",
    },

    "cases": {
        "dir": os.getenv("SOCOPF_CASE_DIR"),
    },
}

# (section, key) pairs that must be strictly positive
_POSITIVE_KEYS = [
    ("network", "zero_resistance_patch"),
    ("network", "default_angle_bound"),
    ("solver", "tolerance"),
    ("solver", "max_iterations"),
    ("relaxation", "gap_tolerance"),
    ("relaxation", "initial_cut_slack"),
    ("relaxation", "slack_underflow"),
    ("warm_start", "gamma_tolerance"),
    ("warm_start", "max_outer_iterations"),
    ("powerflow", "tolerance"),
    ("powerflow", "max_iterations"),
    ("powerflow", "q_limit_tolerance"),
    ("wind", "components"),
    ("wind", "em_max_iter"),
    ("wind", "em_tol"),
    ("wind", "grid_points"),
    ("logging", "retention"),
    ("logging", "max_size_mb"),
]


class Config:
    def __init__(self, config_path: Optional[str] = None, overrides: Optional[dict[str, Any]] = None):
        """Initialize configuration with optional custom config file and overrides"""
        self.config = copy.deepcopy(DEFAULT_CONFIG)

        if config_path and os.path.exists(config_path):
            self._load_custom_config(config_path)

        if overrides:
            self._merge_config(overrides)

        self._validate_config()

    def _validate_config(self) -> None:
        """Validate value ranges; raise ConfigurationError naming the offending key"""
        for section, key in _POSITIVE_KEYS:
            value = self.get(section, key)
            if not isinstance(value, (int, float)) or value <= 0:
                raise ConfigurationError(f"{section}.{key} must be positive (got {value!r})")

        if self.get("warm_start", "max_cut_rounds") < 0:
            raise ConfigurationError("warm_start.max_cut_rounds must be >= 0")

        damping = self.get("warm_start", "damping")
        if not 0.0 < damping <= 1.0:
            raise ConfigurationError(f"warm_start.damping must be in (0, 1] (got {damping})")

        if self.get("warm_start", "init_mode") not in ("flat", "dcopf", "dc_opf", "user"):
            raise ConfigurationError(
                f"warm_start.init_mode must be flat, dcopf or user "
                f"(got {self.get('warm_start', 'init_mode')!r})"
            )

        if self.get("relaxation", "flow_limit_segments") < 4:
            raise ConfigurationError("relaxation.flow_limit_segments must be >= 4")

        arc = self.get("relaxation", "flow_limit_arc")
        if len(arc) != 2 or arc[0] >= arc[1]:
            raise ConfigurationError(f"relaxation.flow_limit_arc must be [lo, hi] with lo < hi (got {arc})")

        if self.get("wind", "pwl_segments") < 2:
            raise ConfigurationError("wind.pwl_segments must be >= 2")

        pf = self.get("wind", "power_factor")
        if not 0.95 <= pf <= 1.0:
            raise ConfigurationError(f"wind.power_factor must be in [0.95, 1] (got {pf})")

        if self.get("output", "format") not in ("csv", "json"):
            raise ConfigurationError("output.format must be csv or json")

    def _load_custom_config(self, config_path: str) -> None:
        """Load and merge custom configuration from yaml file"""
        try:
            with open(config_path, "r") as f:
                custom_config = yaml.safe_load(f)
        except (OSError, yaml.YAMLError) as e:
            raise ConfigurationError(f"Error loading custom config {config_path}: {e}") from e
        if custom_config:
            if not isinstance(custom_config, dict):
                raise ConfigurationError(f"{config_path}: top level must be a mapping")
            self._merge_config(custom_config)

    def _merge_config(self, custom_config: dict[str, Any]) -> None:
        """Deep merge custom config with default config"""
        for key, value in custom_config.items():
            if key in self.config and isinstance(self.config[key], dict):
                if not isinstance(value, dict):
                    raise ConfigurationError(f"section {key!r} must be a mapping")
                self.config[key].update(value)
            else:
                self.config[key] = value

    def get(self, section: str, key: Optional[str] = None) -> Any:
        """Get configuration value(s)"""
        if key:
            return self.config.get(section, {}).get(key)
        return self.config.get(section, {})
