"""MATPOWER case parsing and the canonical JSON dump of a PowerNetwork.

Only the ``mpc.baseMVA``, ``mpc.bus``, ``mpc.gen``, ``mpc.branch`` and
``mpc.gencost`` assignments are read; everything else in the file is ignored.
"""
import json
import logging
import math
import os
import re
from dataclasses import asdict
from importlib import resources
from typing import Any, Optional

import numpy as np

from ..errors import CaseParseError
from .model import (
    BranchRecord,
    BusRecord,
    BusType,
    GeneratorRecord,
    PowerNetwork,
    WindFarmSpec,
)

logger = logging.getLogger(__name__)

DEFAULT_GENCOST = {"c2": 0.01, "c1": 40.0, "c0": 0.0}
DEFAULT_ANGLE_BOUND = math.pi / 3

_MATRIX_START = re.compile(r"^\s*mpc\.(bus|gen|branch|gencost)\s*=\s*\[(.*)$")
_BASE_MVA = re.compile(r"^\s*mpc\.baseMVA\s*=\s*([^;%\s]+)\s*;?")

# minimum column counts per matrix
_MIN_COLUMNS = {"bus": 13, "gen": 10, "branch": 11, "gencost": 4}

ISOLATED_BUS = 4


def _strip_comment(line: str) -> str:
    return line.split("%", 1)[0]


def _parse_row(tokens: list[str], line_no: int) -> list[float]:
    try:
        return [float(tok) for tok in tokens]
    except ValueError as e:
        raise CaseParseError(f"non-numeric matrix entry ({e})", line_no) from e


def _read_matrices(text: str) -> tuple[Optional[float], dict[str, list[tuple[int, list[float]]]]]:
    """Scan the case text; return baseMVA and the numeric rows (with line numbers) per matrix."""
    base_mva = None
    matrices: dict[str, list[tuple[int, list[float]]]] = {}
    current: Optional[str] = None
    start_line = 0

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)

        if current is None:
            m = _BASE_MVA.match(line)
            if m:
                try:
                    base_mva = float(m.group(1))
                except ValueError as e:
                    raise CaseParseError(f"invalid baseMVA {m.group(1)!r}", line_no) from e
                continue
            m = _MATRIX_START.match(line)
            if not m:
                continue
            current = m.group(1)
            start_line = line_no
            matrices[current] = []
            line = m.group(2)

        closed = "]" in line
        if closed:
            line = line.split("]", 1)[0]

        for chunk in line.split(";"):
            tokens = chunk.replace(",", " ").split()
            if tokens:
                matrices[current].append((line_no, _parse_row(tokens, line_no)))

        if closed:
            current = None

    if current is not None:
        raise CaseParseError(f"unterminated mpc.{current} matrix", start_line)
    return base_mva, matrices


def _check_columns(name: str, rows: list[tuple[int, list[float]]]) -> None:
    needed = _MIN_COLUMNS[name]
    for line_no, row in rows:
        if len(row) < needed:
            raise CaseParseError(
                f"mpc.{name} row has {len(row)} columns, expected at least {needed}", line_no
            )


def _angle_bounds(row: list[float], default: float) -> tuple[float, float]:
    if len(row) < 13:
        return -default, default
    angmin, angmax = row[11], row[12]
    if angmin <= -360.0 or angmax >= 360.0 or (angmin == 0.0 and angmax == 0.0):
        return -default, default
    return math.radians(angmin), math.radians(angmax)


def _gencost_coefficients(row: list[float], line_no: int, warnings: list[str]) -> tuple[float, float, float]:
    """Quadratic ($/MW²h, $/MWh, $/h) coefficients from one gencost row."""
    model = int(row[0])
    n = int(row[3])
    params = row[4:]
    if len(params) < (2 * n if model == 1 else n):
        raise CaseParseError(f"gencost row declares {n} parameters but has {len(params)}", line_no)

    if model == 2:
        coeffs = params[:n]
        if n > 3:
            warnings.append(f"line {line_no}: polynomial cost of degree {n - 1} truncated to quadratic")
            coeffs = coeffs[-3:]
        coeffs = [0.0] * (3 - len(coeffs)) + list(coeffs)
        c2, c1, c0 = coeffs
    elif model == 1:
        points = np.asarray(params[: 2 * n], dtype=float).reshape(n, 2)
        degree = min(2, n - 1)
        fitted = np.polyfit(points[:, 0], points[:, 1], degree) if n > 1 else np.array([points[0, 1]])
        fitted = np.concatenate([np.zeros(3 - len(fitted)), fitted])
        c2, c1, c0 = (float(c) for c in fitted)
        warnings.append(f"line {line_no}: piecewise-linear cost fitted with a quadratic")
    else:
        raise CaseParseError(f"unknown gencost model {model}", line_no)

    if c2 < 0.0:
        warnings.append(f"line {line_no}: negative quadratic cost clipped to 0")
        c2 = 0.0
    return c2, c1, c0


def parse_matpower_case(
    text: str,
    name: str = "case",
    default_gencost: Optional[dict[str, float]] = None,
    default_angle_bound: float = DEFAULT_ANGLE_BOUND,
) -> PowerNetwork:
    """Parse MATPOWER case text into a per-unit PowerNetwork.

    Out-of-service generators and branches, and isolated buses (type 4), are dropped.
    A missing gencost matrix gives every generator ``default_gencost`` with a warning.
    """
    default_gencost = default_gencost or DEFAULT_GENCOST
    base_mva, matrices = _read_matrices(text)
    warnings: list[str] = []

    if base_mva is None:
        raise CaseParseError("mpc.baseMVA not found")
    if base_mva <= 0.0:
        raise CaseParseError(f"baseMVA must be positive (got {base_mva})")
    for required in ("bus", "gen", "branch"):
        if required not in matrices:
            raise CaseParseError(f"mpc.{required} matrix not found")
    for key, rows in matrices.items():
        _check_columns(key, rows)

    isolated = set()
    buses = []
    for line_no, row in matrices["bus"]:
        bus_id = int(row[0])
        code = int(row[1])
        if code == ISOLATED_BUS:
            isolated.add(bus_id)
            continue
        try:
            bus_type = BusType(code)
        except ValueError as e:
            raise CaseParseError(f"bus {bus_id}: unknown bus type {code}", line_no) from e
        buses.append(
            BusRecord(
                id=bus_id,
                bus_type=bus_type,
                Pd=row[2] / base_mva,
                Qd=row[3] / base_mva,
                gsh=row[4] / base_mva,
                bsh=row[5] / base_mva,
                v_min=row[12],
                v_max=row[11],
                base_kV=row[9],
                v_init=row[7],
                theta_init=math.radians(row[8]),
            )
        )
    if isolated:
        warnings.append(f"dropped {len(isolated)} isolated buses")

    gencost_rows = matrices.get("gencost")
    if gencost_rows is None:
        warnings.append("gencost missing, using default quadratic cost")
    elif len(gencost_rows) < len(matrices["gen"]):
        raise CaseParseError(
            f"gencost has {len(gencost_rows)} rows for {len(matrices['gen'])} generators",
            gencost_rows[-1][0] if gencost_rows else None,
        )

    generators = []
    for k, (line_no, row) in enumerate(matrices["gen"]):
        if row[7] <= 0 or int(row[0]) in isolated:
            continue
        if gencost_rows is None:
            c2, c1, c0 = default_gencost["c2"], default_gencost["c1"], default_gencost["c0"]
        else:
            cost_line, cost_row = gencost_rows[k]
            c2, c1, c0 = _gencost_coefficients(cost_row, cost_line, warnings)
        generators.append(
            GeneratorRecord(
                bus=int(row[0]),
                P_min=row[9] / base_mva,
                P_max=row[8] / base_mva,
                Q_min=row[4] / base_mva,
                Q_max=row[3] / base_mva,
                # $/h per p.u.² and $/h per p.u.
                c2=c2 * base_mva**2,
                c1=c1 * base_mva,
                c0=c0,
                v_set=row[5],
                P_init=row[1] / base_mva,
                Q_init=row[2] / base_mva,
            )
        )

    branches = []
    for line_no, row in matrices["branch"]:
        if row[10] <= 0 or int(row[0]) in isolated or int(row[1]) in isolated:
            continue
        theta_min, theta_max = _angle_bounds(row, default_angle_bound)
        tau = row[8] if row[8] != 0.0 else 1.0
        if tau < 0.0:
            raise CaseParseError(f"negative tap ratio {tau}", line_no)
        branches.append(
            BranchRecord(
                from_bus=int(row[0]),
                to_bus=int(row[1]),
                r=row[2],
                x=row[3],
                b_ch=row[4],
                tau=tau,
                phi_shift=math.radians(row[9]),
                S_max=row[5] / base_mva,
                theta_min=theta_min,
                theta_max=theta_max,
            )
        )

    for message in warnings:
        logger.warning(f"{name}: {message}")

    return PowerNetwork(
        base_MVA=base_mva,
        buses=tuple(buses),
        branches=tuple(branches),
        generators=tuple(generators),
        name=name,
        warnings=tuple(warnings),
    )


def load_case(path: str, **kwargs: Any) -> PowerNetwork:
    """Read a MATPOWER file, or a bundled case by bare name (``case9``)."""
    if not os.path.exists(path):
        bundled = bundled_case_path(path)
        if bundled is None:
            raise CaseParseError(f"case file not found: {path}")
        path = bundled
    with open(path, "r") as f:
        text = f.read()
    name = os.path.splitext(os.path.basename(path))[0]
    return parse_matpower_case(text, name=name, **kwargs)


def bundled_case_path(name: str) -> Optional[str]:
    stem = os.path.splitext(os.path.basename(name))[0]
    candidate = resources.files("wind_socopf") / "data" / "cases" / f"{stem}.m"
    return str(candidate) if candidate.is_file() else None


def network_to_dict(network: PowerNetwork) -> dict[str, Any]:
    """Canonical JSON-ready representation of a network.

    Schema: ``{"name", "base_MVA", "slack_bus", "buses": [...], "branches": [...],
    "generators": [...], "wind_farms": [...]}``; every record is a flat object of its
    dataclass fields, ``bus_type`` as its integer code, wind farm GMMs as nested objects.
    """
    buses = []
    for bus in network.buses:
        record = asdict(bus)
        record["bus_type"] = int(bus.bus_type)
        buses.append(record)
    farms = []
    for farm in network.wind_farms:
        farms.append(
            {
                "bus": farm.bus,
                "P_wind_min": farm.P_wind_min,
                "P_wind_max": farm.P_wind_max,
                "power_factor": farm.power_factor,
                "k_L": farm.k_L,
                "k_H": farm.k_H,
                "pwl_segments": farm.pwl_segments,
                "gmm": farm.gmm.to_dict() if farm.gmm is not None else None,
            }
        )
    return {
        "name": network.name,
        "base_MVA": network.base_MVA,
        "slack_bus": network.slack_bus,
        "buses": buses,
        "branches": [asdict(br) for br in network.branches],
        "generators": [asdict(g) for g in network.generators],
        "wind_farms": farms,
    }


def network_from_dict(payload: dict[str, Any]) -> PowerNetwork:
    from ..windcost.gmm import GmmModel

    buses = tuple(
        BusRecord(**{**b, "bus_type": BusType(b["bus_type"])}) for b in payload["buses"]
    )
    farms = []
    for f in payload.get("wind_farms", []):
        gmm = GmmModel.from_dict(f["gmm"]) if f.get("gmm") else None
        farms.append(WindFarmSpec(**{**f, "gmm": gmm}))
    return PowerNetwork(
        base_MVA=payload["base_MVA"],
        buses=buses,
        branches=tuple(BranchRecord(**br) for br in payload["branches"]),
        generators=tuple(GeneratorRecord(**g) for g in payload["generators"]),
        wind_farms=tuple(farms),
        slack_bus=payload.get("slack_bus"),
        name=payload.get("name", "case"),
    )


def dump_network_json(network: PowerNetwork, path: str) -> None:
    with open(path, "w") as f:
        json.dump(network_to_dict(network), f, indent=2)


def load_network_json(path: str) -> PowerNetwork:
    with open(path, "r") as f:
        return network_from_dict(json.load(f))
