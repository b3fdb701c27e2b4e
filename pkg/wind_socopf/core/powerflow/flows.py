"""Exact polar branch flows, bus admittance matrix and the normalized flow error."""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..network.model import PowerNetwork


@dataclass(frozen=True, eq=False)
class VoltageState:
    v: np.ndarray
    theta: np.ndarray

    @classmethod
    def flat(cls, n: int) -> "VoltageState":
        return cls(np.ones(n), np.zeros(n))

    @property
    def complex(self) -> np.ndarray:
        return self.v * np.exp(1j * self.theta)


@dataclass(frozen=True, eq=False)
class BranchFlows:
    P_ij: np.ndarray
    Q_ij: np.ndarray
    P_ji: np.ndarray
    Q_ji: np.ndarray

    @property
    def P_loss(self) -> np.ndarray:
        return self.P_ij + self.P_ji

    @property
    def Q_loss(self) -> np.ndarray:
        return self.Q_ij + self.Q_ji

    @property
    def S_ij(self) -> np.ndarray:
        return np.hypot(self.P_ij, self.Q_ij)

    @property
    def S_ji(self) -> np.ndarray:
        return np.hypot(self.P_ji, self.Q_ji)


def exact_branch_flows(network: PowerNetwork, state: VoltageState) -> BranchFlows:
    """Flows at both ends of every branch from the polar π-model equations."""
    if state.v.shape != (network.n_bus,) or state.theta.shape != (network.n_bus,):
        raise ValueError(
            f"state has {state.v.shape} magnitudes, network has {network.n_bus} buses"
        )
    c = network.coefficients
    f, t = network.from_index, network.to_index
    vi, vj = state.v[f], state.v[t]
    theta = state.theta[f] - state.theta[t]
    vv = vi * vj
    cos, sin = np.cos(theta), np.sin(theta)
    # θ_ji = −θ_ij: cos unchanged, sin flips sign
    return BranchFlows(
        P_ij=c.g_f * vi**2 - vv * (c.g_c_ij * cos + c.b_c_ij * sin),
        Q_ij=-c.b_f * vi**2 + vv * (c.b_c_ij * cos - c.g_c_ij * sin),
        P_ji=c.g_t * vj**2 - vv * (c.g_c_ji * cos - c.b_c_ji * sin),
        Q_ji=-c.b_t * vj**2 + vv * (c.b_c_ji * cos + c.g_c_ji * sin),
    )


def bus_injections(
    network: PowerNetwork, state: VoltageState, flows: BranchFlows
) -> tuple[np.ndarray, np.ndarray]:
    """Net (P, Q) leaving every bus through branches and shunts."""
    n = network.n_bus
    f, t = network.from_index, network.to_index
    P = np.bincount(f, flows.P_ij, n) + np.bincount(t, flows.P_ji, n)
    Q = np.bincount(f, flows.Q_ij, n) + np.bincount(t, flows.Q_ji, n)
    v2 = state.v**2
    return P + network.bus_array("gsh") * v2, Q - network.bus_array("bsh") * v2


def build_ybus(network: PowerNetwork) -> sp.csr_matrix:
    n = network.n_bus
    f, t = network.from_index, network.to_index
    r, x = network.branch_array("r"), network.branch_array("x")
    b_ch = network.branch_array("b_ch")
    tap = network.branch_array("tau") * np.exp(1j * network.branch_array("phi_shift"))
    ys = 1.0 / (r + 1j * x)
    y_tt = ys + 0.5j * b_ch
    y_ff = y_tt / (tap * np.conj(tap))
    y_ft = -ys / np.conj(tap)
    y_tf = -ys / tap
    y_sh = network.bus_array("gsh") + 1j * network.bus_array("bsh")

    rows = np.concatenate([f, f, t, t])
    cols = np.concatenate([f, t, f, t])
    data = np.concatenate([y_ff, y_ft, y_tf, y_tt])
    ybus = sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()
    return (ybus + sp.diags(y_sh)).tocsr()


def normalized_flow_error(approx: BranchFlows, exact: BranchFlows) -> np.ndarray:
    """Per-branch (|S_approx| − |S_exact|) / max |S_exact|, worse of the two ends.

    Returns zeros when every exact flow is zero.
    """
    scale = max(
        float(np.max(exact.S_ij, initial=0.0)), float(np.max(exact.S_ji, initial=0.0))
    )
    if scale == 0.0:
        return np.zeros_like(exact.P_ij)
    gamma_ij = (approx.S_ij - exact.S_ij) / scale
    gamma_ji = (approx.S_ji - exact.S_ji) / scale
    return np.where(np.abs(gamma_ij) >= np.abs(gamma_ji), gamma_ij, gamma_ji)
