import os
from dataclasses import dataclass, replace
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd

from .base_session import BaseSession
from ..config import Config
from ..core.errors import ConfigurationError
from ..core.network import PowerNetwork, WindFarmSpec
from ..core.windcost import (
    GmmFit,
    GmmModel,
    build_pwl_cost,
    fit_gmm_em,
    load_gmm_json,
    load_wind_samples,
    save_gmm_json,
    schedule_sensitivity,
    wind_cost_curve,
)


@dataclass(frozen=True)
class WindFarmRequest:
    """A wind farm to attach, as given on the command line"""

    bus: int
    k_L: float
    k_H: float
    power_factor: float
    gmm_path: Optional[str] = None
    data_path: Optional[str] = None
    P_max: Optional[float] = None  # MW, defaults to the model support
    P_min: float = 0.0
    pwl_segments: Optional[int] = None  # defaults to wind.pwl_segments


_SPEC_KEYS = {"bus", "kl", "kh", "pf", "gmm", "data", "cap", "pmax", "pmin", "segments"}


def parse_wind_spec(text: str, config: Optional[Config] = None) -> WindFarmRequest:
    """Parse ``bus=<id>,kl=<v>,kh=<v>,pf=<v>,{gmm=<path>|data=<path>}[,cap=<MW>][,segments=<L>]``"""
    wind = (config or Config()).get("wind")
    fields: dict[str, str] = {}
    for item in filter(None, (part.strip() for part in text.split(","))):
        key, sep, value = item.partition("=")
        key = key.strip().lower()
        if not sep or key not in _SPEC_KEYS:
            raise ConfigurationError(f"bad wind farm field {item!r} in {text!r}")
        fields[key] = value.strip()
    if "bus" not in fields:
        raise ConfigurationError(f"wind farm spec {text!r} needs bus=<id>")
    if ("gmm" in fields) == ("data" in fields):
        raise ConfigurationError(f"wind farm spec {text!r} needs exactly one of gmm=<path> or data=<path>")
    try:
        cap = fields.get("cap", fields.get("pmax"))
        return WindFarmRequest(
            bus=int(fields["bus"]),
            k_L=float(fields.get("kl", wind["k_L"])),
            k_H=float(fields.get("kh", wind["k_H"])),
            power_factor=float(fields.get("pf", wind["power_factor"])),
            gmm_path=fields.get("gmm"),
            data_path=fields.get("data"),
            P_max=float(cap) if cap is not None else None,
            P_min=float(fields.get("pmin", 0.0)),
            pwl_segments=int(fields["segments"]) if "segments" in fields else None,
        )
    except ValueError as e:
        raise ConfigurationError(f"wind farm spec {text!r}: {e}") from e


class WindSession(BaseSession):
    """Wind farm artifacts: GMM fits, cost curves and PWL costs attached to networks"""

    log_prefix = "🌬️ wind"

    def __init__(
        self,
        session_id: Optional[str] = None,
        config: Optional[Config] = None,
        base_dir: Optional[str] = None,
    ):
        super().__init__(session_id, config)
        self.wind_config = self.config.get("wind")
        self.base_dir = os.path.join(os.getcwd(), base_dir or self.config.get("output", "dir"))
        self.fits = 0
        self.farms_built = 0

    def artifact_path(self, path: str) -> str:
        """Resolve a relative artifact path under the output directory"""
        full_path = path if os.path.isabs(path) else os.path.join(self.base_dir, path)
        os.makedirs(os.path.dirname(full_path) or ".", exist_ok=True)
        return full_path

    def fit(
        self,
        samples: Any,
        K: Optional[int] = None,
        seed: Optional[int] = None,
        support_max: Optional[float] = None,
    ) -> GmmFit:
        """Fit a GMM to MW samples (array or CSV path)"""
        if isinstance(samples, (str, os.PathLike)):
            self.logger.info(f"Loading wind samples from {samples}")
            samples = load_wind_samples(str(samples))
        samples = np.asarray(samples, dtype=float)
        K = K or self.wind_config["components"]
        fit = fit_gmm_em(
            samples,
            K=K,
            max_iter=self.wind_config["em_max_iter"],
            tol=self.wind_config["em_tol"],
            seed=self.wind_config["seed"] if seed is None else seed,
            support_max=support_max,
        )
        self.fits += 1
        status = "converged" if fit.converged else "stopped at the iteration cap"
        self.logger.info(
            f"GMM with {fit.model.K} components {status} after {fit.iterations} iterations, "
            f"log-likelihood {fit.log_likelihood:.4f}"
        )
        return fit

    def save_model(self, model: GmmModel, path: str) -> str:
        full_path = self.artifact_path(path)
        save_gmm_json(model, full_path)
        self.logger.info(f"GMM written to {full_path}")
        return full_path

    def load_model(self, path: str) -> GmmModel:
        model = load_gmm_json(path)
        self.logger.info(f"Loaded {model.K}-component GMM from {path}")
        return model

    def model_for(self, request: WindFarmRequest) -> GmmModel:
        if request.gmm_path:
            return self.load_model(request.gmm_path)
        return self.fit(request.data_path, support_max=request.P_max).model

    def build_farm(self, request: WindFarmRequest, model: Optional[GmmModel] = None) -> WindFarmSpec:
        """Wind farm with its GMM and an L-segment PWL cost over the schedulable range"""
        model = model or self.model_for(request)
        P_max = model.support_max if request.P_max is None else min(request.P_max, model.support_max)
        farm = WindFarmSpec(
            bus=request.bus,
            P_wind_min=request.P_min,
            P_wind_max=P_max,
            power_factor=request.power_factor,
            k_L=request.k_L,
            k_H=request.k_H,
            gmm=model,
            pwl_segments=request.pwl_segments or self.wind_config["pwl_segments"],
        )
        pwl = build_pwl_cost(
            model,
            farm.k_L,
            farm.k_H,
            farm.P_wind_min,
            farm.P_wind_max,
            L=farm.pwl_segments,
            grid_points=self.wind_config["grid_points"],
        )
        self.farms_built += 1
        self.logger.info(
            f"Wind farm at bus {farm.bus}: [{farm.P_wind_min:g}, {farm.P_wind_max:g}] MW, "
            f"{pwl.segments} PWL segments, max PWL error {pwl.max_error:.3e} $/h"
        )
        return replace(farm, pwl=pwl)

    def attach(self, network: PowerNetwork, requests: Sequence[WindFarmRequest]) -> PowerNetwork:
        farms = tuple(self.build_farm(request) for request in requests)
        return network.with_wind_farms(network.wind_farms + farms)

    def cost_curves(
        self,
        model: GmmModel,
        k_L_values: Sequence[float],
        k_H_values: Sequence[float],
        points: Optional[int] = None,
    ) -> pd.DataFrame:
        """Shortage, surplus and total cost curves for every (k_L, k_H) pair"""
        points = points or self.wind_config["grid_points"]
        frames = [
            wind_cost_curve(model, k_L, k_H, points=points).to_frame()
            for k_L in k_L_values
            for k_H in k_H_values
        ]
        if not frames:
            return pd.DataFrame(columns=["k_L", "k_H", "P_schedule", "F_L", "F_H", "total"])
        return pd.concat(frames, ignore_index=True)

    def sensitivity(
        self,
        model: GmmModel,
        k_L_values: Sequence[float],
        k_H_values: Sequence[float],
        P_max: Optional[float] = None,
    ) -> pd.DataFrame:
        frame = schedule_sensitivity(model, k_L_values, k_H_values, P_max)
        self.logger.info(f"Optimal schedules for {len(frame)} (k_L, k_H) pairs")
        return frame

    def stats(self) -> dict[str, Any]:
        return {"gmm_fits": self.fits, "wind_farms": self.farms_built}
