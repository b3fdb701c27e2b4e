"""Shortage/surplus cost of a wind schedule and its convex piecewise-linear model.

Schedules and wind output are in MW, costs in $/h, penalty coefficients in $/MWh.
"""
import logging
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import brentq

from .gmm import GmmModel, gmm_cdf, truncated_first_moment

logger = logging.getLogger(__name__)

PROBABILITY_CUTOFF = 1e-12


def shortage_surplus_cost(
    model: GmmModel,
    P_schedule: Any,
    k_L: float,
    k_H: float,
    P_max: Optional[float] = None,
) -> tuple[Any, Any, Any]:
    """Expected shortage cost F_L, surplus cost F_H and their sum at ``P_schedule``.

    Wind output is counted on [0, P_max]: the shortage integral runs over
    [0, P_schedule] and the surplus integral over [P_schedule, P_max], so model
    mass outside the farm's range adds nothing. A term whose probability is
    below 1e-12 is exactly 0.
    """
    P_max = model.support_max if P_max is None else P_max
    Ps = np.asarray(P_schedule, dtype=float)
    scale = max(P_max, 1.0)
    if np.any(Ps < -1e-9 * scale) or np.any(Ps > P_max + 1e-9 * scale):
        raise ValueError(f"P_schedule must lie in [0, {P_max}]")
    Ps = np.clip(Ps, 0.0, P_max)

    cdf_ps = np.asarray(gmm_cdf(model, Ps))
    p_short = cdf_ps - gmm_cdf(model, 0.0)
    p_surplus = gmm_cdf(model, P_max) - cdf_ps

    shortage = Ps * p_short - truncated_first_moment(model, 0.0, Ps)
    surplus = truncated_first_moment(model, Ps, P_max) - Ps * p_surplus

    F_L = np.where(p_short < PROBABILITY_CUTOFF, 0.0, k_L * np.maximum(shortage, 0.0))
    F_H = np.where(p_surplus < PROBABILITY_CUTOFF, 0.0, k_H * np.maximum(surplus, 0.0))
    total = F_L + F_H
    if Ps.ndim == 0:
        return float(F_L), float(F_H), float(total)
    return F_L, F_H, total


def wind_cost_derivative(
    model: GmmModel, P_schedule: Any, k_L: float, k_H: float, P_max: Optional[float] = None
) -> Any:
    """d(F_L + F_H)/dP_schedule = k_L·(Φ(P) − Φ(0)) − k_H·(Φ(P_max) − Φ(P))"""
    P_max = model.support_max if P_max is None else P_max
    cdf_ps = gmm_cdf(model, P_schedule)
    return k_L * (cdf_ps - gmm_cdf(model, 0.0)) - k_H * (gmm_cdf(model, P_max) - cdf_ps)


def critical_fractile(model: GmmModel, k_L: float, k_H: float, P_max: Optional[float] = None) -> float:
    """Value of Φ at the unconstrained minimiser of the wind cost"""
    P_max = model.support_max if P_max is None else P_max
    return (k_L * gmm_cdf(model, 0.0) + k_H * gmm_cdf(model, P_max)) / (k_L + k_H)


@dataclass(frozen=True, eq=False)
class WindCostCurve:
    P_schedule: np.ndarray
    F_L: np.ndarray
    F_H: np.ndarray
    total: np.ndarray
    k_L: float
    k_H: float

    @property
    def argmin(self) -> float:
        return float(self.P_schedule[int(np.argmin(self.total))])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "k_L": self.k_L,
                "k_H": self.k_H,
                "P_schedule": self.P_schedule,
                "F_L": self.F_L,
                "F_H": self.F_H,
                "total": self.total,
            }
        )


def wind_cost_curve(
    model: GmmModel,
    k_L: float,
    k_H: float,
    lo: float = 0.0,
    hi: Optional[float] = None,
    points: int = 2001,
) -> WindCostCurve:
    hi = model.support_max if hi is None else hi
    grid = np.linspace(lo, hi, points)
    F_L, F_H, total = shortage_surplus_cost(model, grid, k_L, k_H, model.support_max)
    return WindCostCurve(grid, F_L, F_H, total, k_L, k_H)


def optimal_schedule(
    model: GmmModel,
    k_L: float,
    k_H: float,
    lo: float = 0.0,
    hi: Optional[float] = None,
    P_max: Optional[float] = None,
) -> float:
    """Closed-form minimiser: the schedule where Φ(P) hits the critical fractile, clipped to [lo, hi]."""
    hi = model.support_max if hi is None else hi
    target = critical_fractile(model, k_L, k_H, P_max)
    if gmm_cdf(model, lo) >= target:
        return float(lo)
    if gmm_cdf(model, hi) <= target:
        return float(hi)
    return float(brentq(lambda p: gmm_cdf(model, p) - target, lo, hi, xtol=1e-10))


def schedule_sensitivity(
    model: GmmModel,
    k_L_values: Sequence[float],
    k_H_values: Sequence[float],
    P_max: Optional[float] = None,
) -> pd.DataFrame:
    """Optimal schedule per (k_L, k_H) pair with its % change per step of each coefficient."""
    P_max = model.support_max if P_max is None else P_max
    rows = []
    for k_L in k_L_values:
        for k_H in k_H_values:
            P_opt = optimal_schedule(model, k_L, k_H, 0.0, P_max, P_max)
            _, _, cost = shortage_surplus_cost(model, P_opt, k_L, k_H, P_max)
            rows.append({"k_L": float(k_L), "k_H": float(k_H), "P_opt": P_opt, "cost": cost})
    frame = pd.DataFrame(rows, columns=["k_L", "k_H", "P_opt", "cost"])
    if frame.empty:
        frame["pct_change_k_L"] = []
        frame["pct_change_k_H"] = []
        return frame
    by_k_L = frame.sort_values("k_L").groupby("k_H")["P_opt"]
    by_k_H = frame.sort_values("k_H").groupby("k_L")["P_opt"]
    frame["pct_change_k_L"] = by_k_L.pct_change(fill_method=None).reindex(frame.index) * 100.0
    frame["pct_change_k_H"] = by_k_H.pct_change(fill_method=None).reindex(frame.index) * 100.0
    return frame


@dataclass(frozen=True, eq=False)
class PwlCost:
    """Pointwise maximum of affine pieces slope·P + intercept on [lo, hi]"""

    slopes: np.ndarray
    intercepts: np.ndarray
    lo: float
    hi: float
    max_error: float
    tangent_points: np.ndarray
    convexified: bool = False

    @property
    def segments(self) -> int:
        return int(self.slopes.size)

    def evaluate(self, P: Any) -> Any:
        P = np.asarray(P, dtype=float)
        values = np.max(np.multiply.outer(P, self.slopes) + self.intercepts, axis=-1)
        return values if values.ndim else float(values)


def _numeric_derivative(func: Callable[[Any], Any], lo: float, hi: float) -> Callable[[Any], Any]:
    h = 1e-6 * max(hi - lo, 1.0)

    def deriv(p: Any) -> Any:
        p = np.asarray(p, dtype=float)
        left = np.maximum(p - h, lo)
        right = np.minimum(p + h, hi)
        return (np.asarray(func(right)) - np.asarray(func(left))) / (right - left)

    return deriv


def _lower_hull(x: np.ndarray, y: np.ndarray) -> list[int]:
    """Indices of the lower convex hull of points sorted by x (monotone chain)."""
    hull: list[int] = []
    for k in range(x.size):
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            cross = (x[j] - x[i]) * (y[k] - y[i]) - (y[j] - y[i]) * (x[k] - x[i])
            if cross > 0.0:
                break
            hull.pop()
        hull.append(k)
    return hull


def _tangent_points(
    deriv: Callable[[Any], Any], lo: float, hi: float, L: int, grid: np.ndarray
) -> np.ndarray:
    # density ∝ sqrt(curvature) equalizes tangent gaps; uniform for a quadratic
    curvature = np.clip(np.gradient(np.asarray(deriv(grid), dtype=float), grid), 0.0, None)
    weight = np.sqrt(curvature)
    if weight.max() <= 0.0:
        weight = np.ones_like(grid)
    else:
        weight = weight + 1e-6 * weight.max()
    cumulative = cumulative_trapezoid(weight, grid, initial=0.0)
    quantiles = np.linspace(0.0, cumulative[-1], L)
    points = np.interp(quantiles, cumulative, grid)
    points[0], points[-1] = lo, hi
    return points


def build_pwl(
    func: Callable[[Any], Any],
    lo: float,
    hi: float,
    L: int = 20,
    deriv: Optional[Callable[[Any], Any]] = None,
    grid_points: int = 2001,
) -> PwlCost:
    """Outer PWL model of a convex curve from L tangent lines over [lo, hi].

    Tangent points follow the square root of the curvature. A curve that is not
    numerically convex is replaced by its lower convex hull, and the deviation is
    reported in ``max_error``.
    """
    if L < 2:
        raise ValueError("a PWL cost needs at least 2 segments")
    if not hi > lo:
        raise ValueError(f"PWL range must satisfy lo < hi (got [{lo}, {hi}])")
    deriv = deriv or _numeric_derivative(func, lo, hi)
    grid = np.linspace(lo, hi, grid_points)
    values = np.asarray(func(grid), dtype=float)
    tolerance = 1e-9 * (1.0 + float(np.ptp(values)))

    points = _tangent_points(deriv, lo, hi, L, grid)
    slopes = np.asarray(deriv(points), dtype=float)
    intercepts = np.asarray(func(points), dtype=float) - slopes * points
    approx = np.max(np.multiply.outer(grid, slopes) + intercepts, axis=-1)

    convexified = False
    if np.any(approx > values + tolerance):
        logger.warning("cost curve is not numerically convex, using its lower convex hull")
        convexified = True
        hull = np.array(_lower_hull(grid, values))
        edge_slopes = np.diff(values[hull]) / np.diff(grid[hull])
        # hull edge that covers each tangent point
        edge = np.clip(np.searchsorted(grid[hull], points, side="right") - 1, 0, edge_slopes.size - 1)
        edge = np.unique(edge)
        slopes = edge_slopes[edge]
        intercepts = values[hull][edge] - slopes * grid[hull][edge]
        points = grid[hull][edge]
        approx = np.max(np.multiply.outer(grid, slopes) + intercepts, axis=-1)

    order = np.argsort(slopes, kind="stable")
    max_error = float(np.max(np.abs(values - approx)))
    return PwlCost(
        slopes=slopes[order],
        intercepts=intercepts[order],
        lo=float(lo),
        hi=float(hi),
        max_error=max_error,
        tangent_points=np.asarray(points)[order],
        convexified=convexified,
    )


def build_pwl_cost(
    model: GmmModel,
    k_L: float,
    k_H: float,
    lo: float,
    hi: float,
    L: int = 20,
    grid_points: int = 2001,
) -> PwlCost:
    """PWL model of the total wind cost over the farm's schedulable range (MW)."""

    def total(p: Any) -> Any:
        return shortage_surplus_cost(model, p, k_L, k_H, model.support_max)[2]

    pwl = build_pwl(
        total,
        lo,
        hi,
        L,
        deriv=lambda p: wind_cost_derivative(model, p, k_L, k_H),
        grid_points=grid_points,
    )
    logger.debug(f"wind PWL with {pwl.segments} segments, max error {pwl.max_error:.3e} $/h")
    return pwl

