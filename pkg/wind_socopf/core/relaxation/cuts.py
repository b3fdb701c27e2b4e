"""Rolling cutting planes on the relaxed auxiliaries φθ and φv.

For a branch whose relaxation gap is too large, two tangent cuts are built at the
expansion point (θk, v_ik, v_jk):

    φθ ≤ 2·θk·θ − θk² + Δθ
    φv ≥ (v_jk / 2v_ik)·u_i + (v_ik / 2v_jk)·u_j − Δv

Each new cut replaces the previous one of the same branch.
"""
from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True, eq=False)
class DeltaState:
    """Per-branch cut slacks Δθ and Δv"""

    delta_theta: np.ndarray
    delta_v: np.ndarray

    @classmethod
    def initial(cls, n_branch: int, value: float = 1e-2) -> "DeltaState":
        return cls(np.full(n_branch, value), np.full(n_branch, value))

    def halved(self, mask: np.ndarray) -> "DeltaState":
        factor = np.where(mask, 0.5, 1.0)
        return DeltaState(self.delta_theta * factor, self.delta_v * factor)

    def exhausted(self, floor: float = 1e-12) -> np.ndarray:
        return (self.delta_theta < floor) | (self.delta_v < floor)


@dataclass(frozen=True)
class BranchCut:
    theta_k: float
    v_ik: float
    v_jk: float
    delta_theta: float
    delta_v: float

    def theta_row(self) -> tuple[float, float]:
        """(slope on θ, rhs) of φθ − slope·θ ≤ rhs"""
        return 2.0 * self.theta_k, -self.theta_k**2 + self.delta_theta

    def voltage_row(self) -> tuple[float, float, float]:
        """(a_i, a_j, rhs) of a_i·u_i + a_j·u_j − φv ≤ rhs"""
        return self.v_jk / (2.0 * self.v_ik), self.v_ik / (2.0 * self.v_jk), self.delta_v


@dataclass(frozen=True)
class CutSet:
    cuts: dict[int, BranchCut] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.cuts)

    def __contains__(self, branch: int) -> bool:
        return branch in self.cuts

    def items(self):
        return sorted(self.cuts.items())


def generate_rolling_cuts(
    theta_k: np.ndarray,
    v_ik: np.ndarray,
    v_jk: np.ndarray,
    violating: np.ndarray,
    delta_state: DeltaState,
    previous: CutSet = CutSet(),
) -> tuple[CutSet, DeltaState]:
    """Halve Δ on the violating branches and roll their cuts to the new Δ.

    ``theta_k``, ``v_ik`` and ``v_jk`` are per-branch expansion values and
    ``violating`` a boolean mask from the combined gap test.
    """
    violating = np.asarray(violating, dtype=bool)
    picked = np.flatnonzero(violating)
    if np.any(v_ik[picked] <= 0.0) or np.any(v_jk[picked] <= 0.0):
        raise ValueError("cut generation needs positive expansion voltages")

    delta_state = delta_state.halved(violating)
    cuts = dict(previous.cuts)
    for k in picked:
        cuts[int(k)] = BranchCut(
            theta_k=float(theta_k[k]),
            v_ik=float(v_ik[k]),
            v_jk=float(v_jk[k]),
            delta_theta=float(delta_state.delta_theta[k]),
            delta_v=float(delta_state.delta_v[k]),
        )
    return replace(previous, cuts=cuts), delta_state
