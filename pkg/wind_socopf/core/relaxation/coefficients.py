"""Second-order Taylor constants and the per-direction flow coefficients built on them.

Around an angle difference θk the trigonometric terms are replaced by

    sin θ ≈ α1·θ + α0
    cos θ ≈ β2·θ² + β1·θ + β0

which match sin/cos and their first derivatives at θk. Substituting them into the
polar flow equations, and replacing v_i·v_j by φv and θ² by φθ, gives flows that
are linear in (u, φv, θ, φθ).
"""
from dataclasses import dataclass
from typing import Any

import numpy as np


@dataclass(frozen=True, eq=False)
class TaylorCoefficients:
    alpha1: Any
    alpha0: Any
    beta2: Any
    beta1: Any
    beta0: Any

    def sin(self, theta: Any) -> Any:
        return self.alpha1 * theta + self.alpha0

    def cos(self, theta: Any) -> Any:
        return self.beta2 * theta**2 + self.beta1 * theta + self.beta0


def taylor_coefficients(theta_k: Any) -> TaylorCoefficients:
    theta_k = np.asarray(theta_k, dtype=float)
    if np.any(np.abs(theta_k) >= np.pi / 2):
        raise ValueError("expansion angle must satisfy |θk| < π/2")
    cos, sin = np.cos(theta_k), np.sin(theta_k)
    alpha0 = sin - theta_k * cos
    return TaylorCoefficients(
        alpha1=cos,
        alpha0=alpha0,
        beta2=-0.5 * cos,
        beta1=-alpha0,
        beta0=cos + theta_k * sin - 0.5 * theta_k**2 * cos,
    )


@dataclass(frozen=True, eq=False)
class FlowCoefficients:
    """Linear-flow constants of one branch direction (arrays or scalars)"""

    gP: Any
    bP: Any
    bQ: Any
    gQ: Any
    bPloss: Any
    gQloss: Any


def _direction(g_c: Any, b_c: Any, theta_k: Any, vv: Any) -> FlowCoefficients:
    tc = taylor_coefficients(theta_k)
    return FlowCoefficients(
        gP=(g_c * tc.beta0 + b_c * tc.alpha0)
        + (g_c * tc.beta1 + b_c * tc.alpha1) * theta_k
        + g_c * tc.beta2 * theta_k**2,
        bP=(g_c * tc.beta1 + b_c * tc.alpha1) * vv,
        bQ=(-g_c * tc.alpha0 + b_c * tc.beta0)
        + (-g_c * tc.alpha1 + b_c * tc.beta1) * theta_k
        + b_c * tc.beta2 * theta_k**2,
        gQ=(g_c * tc.alpha1 - b_c * tc.beta1) * vv,
        bPloss=g_c * tc.beta2 * vv,
        gQloss=-b_c * tc.beta2 * vv,
    )


def flow_coefficients(
    coeffs: Any, theta_k: Any, v_ik: Any, v_jk: Any
) -> tuple[FlowCoefficients, FlowCoefficients]:
    """Coefficients of directions ij and ji around (θk, v_ik, v_jk).

    ``coeffs`` is a BranchCoefficients or CoefficientArrays; direction ji expands
    around −θk with its own coupling terms.
    """
    v_ik = np.asarray(v_ik, dtype=float)
    v_jk = np.asarray(v_jk, dtype=float)
    if np.any(v_ik <= 0.0) or np.any(v_jk <= 0.0):
        raise ValueError("expansion voltages must be positive")
    theta_k = np.asarray(theta_k, dtype=float)
    vv = v_ik * v_jk
    return (
        _direction(coeffs.g_c_ij, coeffs.b_c_ij, theta_k, vv),
        _direction(coeffs.g_c_ji, coeffs.b_c_ji, -theta_k, vv),
    )


def approx_branch_flow(
    fc: FlowCoefficients,
    gf: Any,
    bf: Any,
    u_i: Any,
    phi_v: Any,
    theta_ij: Any,
    phi_theta: Any,
    theta_k: Any,
) -> tuple[Any, Any]:
    """Relaxed (P, Q) of one direction; for ji pass (g_t, b_t, u_j, −θ, −θk)."""
    d_theta = theta_ij - theta_k
    d_square = phi_theta - theta_k**2
    P = gf * u_i - fc.gP * phi_v - fc.bP * d_theta - fc.bPloss * d_square
    Q = -bf * u_i + fc.bQ * phi_v - fc.gQ * d_theta - fc.gQloss * d_square
    return P, Q
