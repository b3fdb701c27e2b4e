"""Per-unit network model: bus, branch, generator and wind farm records.

All electrical quantities are stored in per-unit on ``PowerNetwork.base_MVA``.
Wind farm ranges are kept in MW because the wind cost curve is expressed in MW.
"""
import cmath
import logging
import math
from dataclasses import dataclass, field, replace
from enum import IntEnum
from functools import cached_property
from typing import Any, Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ..errors import NetworkValidationError

logger = logging.getLogger(__name__)


class BusType(IntEnum):
    """MATPOWER bus-type codes"""

    PQ = 1
    PV = 2
    REF = 3


@dataclass(frozen=True)
class BusRecord:
    id: int
    bus_type: BusType
    Pd: float
    Qd: float
    gsh: float
    bsh: float
    v_min: float
    v_max: float
    base_kV: float = 0.0
    v_init: float = 1.0
    theta_init: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.v_min <= self.v_max:
            raise NetworkValidationError(
                f"bus {self.id}: voltage bounds must satisfy 0 < v_min <= v_max "
                f"(got {self.v_min}, {self.v_max})"
            )


@dataclass(frozen=True)
class BranchRecord:
    from_bus: int
    to_bus: int
    r: float
    x: float
    b_ch: float = 0.0
    tau: float = 1.0
    phi_shift: float = 0.0
    S_max: float = 0.0  # 0 means unlimited
    theta_min: float = -math.pi / 3
    theta_max: float = math.pi / 3

    @property
    def unlimited(self) -> bool:
        return not (self.S_max > 0.0 and math.isfinite(self.S_max))

    @property
    def is_plain_line(self) -> bool:
        return self.tau == 1.0 and self.phi_shift == 0.0


@dataclass(frozen=True)
class GeneratorRecord:
    bus: int
    P_min: float
    P_max: float
    Q_min: float
    Q_max: float
    c2: float
    c1: float
    c0: float
    v_set: float = 1.0
    P_init: float = 0.0
    Q_init: float = 0.0

    def __post_init__(self):
        if self.P_min > self.P_max:
            raise NetworkValidationError(f"generator at bus {self.bus}: P_min > P_max")
        if self.Q_min > self.Q_max:
            raise NetworkValidationError(f"generator at bus {self.bus}: Q_min > Q_max")

    def cost(self, P: Any) -> Any:
        """Quadratic fuel cost in $/h for output ``P`` in p.u."""
        return self.c2 * P**2 + self.c1 * P + self.c0


@dataclass(frozen=True)
class WindFarmSpec:
    bus: int
    P_wind_min: float
    P_wind_max: float
    power_factor: float
    k_L: float
    k_H: float
    gmm: Optional[Any] = None
    pwl: Optional[Any] = None
    pwl_segments: int = 20

    def __post_init__(self):
        if not 0.0 <= self.P_wind_min <= self.P_wind_max:
            raise NetworkValidationError(
                f"wind farm at bus {self.bus}: need 0 <= P_wind_min <= P_wind_max"
            )
        if not 0.95 <= self.power_factor <= 1.0:
            raise NetworkValidationError(
                f"wind farm at bus {self.bus}: power factor {self.power_factor} "
                "outside the grid-code range [0.95, 1]"
            )
        if self.pwl_segments < 2:
            raise NetworkValidationError(
                f"wind farm at bus {self.bus}: a PWL cost needs at least 2 segments (got {self.pwl_segments})"
            )

    @property
    def tan_phi(self) -> float:
        return math.tan(math.acos(self.power_factor))


@dataclass(frozen=True)
class BranchCoefficients:
    g_f: float
    b_f: float
    g_t: float
    b_t: float
    g_c_ij: float
    b_c_ij: float
    g_c_ji: float
    b_c_ji: float


def derive_branch_coefficients(branch: BranchRecord) -> BranchCoefficients:
    """Constant π-model terms of the polar flow equations."""
    if branch.tau <= 0.0:
        raise NetworkValidationError(
            f"branch {branch.from_bus}-{branch.to_bus}: tap ratio must be positive"
        )
    z = complex(branch.r, branch.x)
    if z == 0:
        raise NetworkValidationError(
            f"branch {branch.from_bus}-{branch.to_bus}: zero series impedance"
        )
    y_conj = (1.0 / z).conjugate()
    t = branch.tau * cmath.exp(1j * branch.phi_shift)
    y_self = y_conj - 0.5j * branch.b_ch
    from_self = y_self / abs(t) ** 2
    c_ij = y_conj / t
    c_ji = y_conj / t.conjugate()
    return BranchCoefficients(
        g_f=from_self.real,
        b_f=-from_self.imag,
        g_t=y_self.real,
        b_t=-y_self.imag,
        g_c_ij=c_ij.real,
        b_c_ij=-c_ij.imag,
        g_c_ji=c_ji.real,
        b_c_ji=-c_ji.imag,
    )


@dataclass(frozen=True, eq=False)
class CoefficientArrays:
    """Branch coefficients stacked into arrays, one entry per branch"""

    g_f: np.ndarray
    b_f: np.ndarray
    g_t: np.ndarray
    b_t: np.ndarray
    g_c_ij: np.ndarray
    b_c_ij: np.ndarray
    g_c_ji: np.ndarray
    b_c_ji: np.ndarray


@dataclass(frozen=True)
class PowerNetwork:
    base_MVA: float
    buses: tuple[BusRecord, ...]
    branches: tuple[BranchRecord, ...]
    generators: tuple[GeneratorRecord, ...]
    wind_farms: tuple[WindFarmSpec, ...] = ()
    slack_bus: Optional[int] = None
    name: str = "case"
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise NetworkValidationError("duplicate bus ids")
        known = set(ids)
        for br in self.branches:
            for end in (br.from_bus, br.to_bus):
                if end not in known:
                    raise NetworkValidationError(
                        f"branch {br.from_bus}-{br.to_bus} references unknown bus {end}"
                    )
        for gen in self.generators:
            if gen.bus not in known:
                raise NetworkValidationError(f"generator references unknown bus {gen.bus}")
        for farm in self.wind_farms:
            if farm.bus not in known:
                raise NetworkValidationError(f"wind farm references unknown bus {farm.bus}")

        slacks = [b.id for b in self.buses if b.bus_type == BusType.REF]
        if len(slacks) != 1:
            raise NetworkValidationError(
                f"exactly one reference bus required, found {len(slacks)}"
            )
        if self.slack_bus is None:
            object.__setattr__(self, "slack_bus", slacks[0])
        elif self.slack_bus != slacks[0]:
            raise NetworkValidationError(
                f"slack_bus {self.slack_bus} is not the reference bus {slacks[0]}"
            )

        n_islands = self.island_count
        if n_islands > 1:
            logger.warning(f"{self.name}: network has {n_islands} islands")

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @property
    def n_branch(self) -> int:
        return len(self.branches)

    @property
    def n_gen(self) -> int:
        return len(self.generators)

    @cached_property
    def bus_index(self) -> dict[int, int]:
        return {b.id: k for k, b in enumerate(self.buses)}

    @property
    def slack_index(self) -> int:
        return self.bus_index[self.slack_bus]

    @cached_property
    def from_index(self) -> np.ndarray:
        return np.array([self.bus_index[br.from_bus] for br in self.branches], dtype=int)

    @cached_property
    def to_index(self) -> np.ndarray:
        return np.array([self.bus_index[br.to_bus] for br in self.branches], dtype=int)

    @cached_property
    def gen_index(self) -> np.ndarray:
        return np.array([self.bus_index[g.bus] for g in self.generators], dtype=int)

    @cached_property
    def wind_index(self) -> np.ndarray:
        return np.array([self.bus_index[w.bus] for w in self.wind_farms], dtype=int)

    @cached_property
    def island_count(self) -> int:
        n = self.n_bus
        if n == 0:
            return 0
        adjacency = coo_matrix(
            (np.ones(self.n_branch), (self.from_index, self.to_index)), shape=(n, n)
        )
        count, _ = connected_components(adjacency, directed=False)
        return int(count)

    @cached_property
    def coefficients(self) -> CoefficientArrays:
        rows = [derive_branch_coefficients(br) for br in self.branches]
        return CoefficientArrays(
            **{
                name: np.array([getattr(c, name) for c in rows], dtype=float)
                for name in CoefficientArrays.__dataclass_fields__
            }
        )

    def bus_array(self, attr: str) -> np.ndarray:
        return np.array([getattr(b, attr) for b in self.buses], dtype=float)

    def branch_array(self, attr: str) -> np.ndarray:
        return np.array([getattr(br, attr) for br in self.branches], dtype=float)

    def gen_array(self, attr: str) -> np.ndarray:
        return np.array([getattr(g, attr) for g in self.generators], dtype=float)

    def generation_cost(self, gen_p: np.ndarray) -> float:
        """Total fossil cost in $/h for per-unit dispatch ``gen_p``"""
        c2, c1, c0 = self.gen_array("c2"), self.gen_array("c1"), self.gen_array("c0")
        gen_p = np.asarray(gen_p, dtype=float)
        return float(np.sum(c2 * gen_p**2 + c1 * gen_p + c0))

    def scaled_load(self, factor: float) -> "PowerNetwork":
        """Uniform load multiplier applied to every Pd and Qd"""
        buses = tuple(replace(b, Pd=b.Pd * factor, Qd=b.Qd * factor) for b in self.buses)
        return replace(self, buses=buses, name=f"{self.name}@{factor:g}")

    def with_wind_farms(self, farms: tuple[WindFarmSpec, ...]) -> "PowerNetwork":
        return replace(self, wind_farms=tuple(farms))


def patch_zero_resistance(
    network: PowerNetwork, r_min: float = 1e-4
) -> tuple[PowerNetwork, int]:
    """Give every zero-resistance branch a small resistance ``r_min`` (p.u.).

    Returns the patched network and the number of branches that were touched.
    """
    if r_min <= 0.0:
        raise ValueError("r_min must be positive")
    patched = []
    count = 0
    for br in network.branches:
        if br.r == 0.0:
            patched.append(replace(br, r=r_min))
            count += 1
        else:
            patched.append(br)
    if count == 0:
        return network, 0
    logger.info(f"{network.name}: patched {count} zero-resistance branches to r={r_min}")
    return replace(network, branches=tuple(patched)), count
