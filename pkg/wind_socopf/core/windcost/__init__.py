from .gmm import (
    GmmFit,
    GmmModel,
    density_table,
    fit_gmm_em,
    gmm_cdf,
    gmm_pdf,
    load_gmm_json,
    load_wind_samples,
    save_gmm_json,
    truncated_first_moment,
)
from .cost import (
    PwlCost,
    WindCostCurve,
    build_pwl,
    build_pwl_cost,
    critical_fractile,
    optimal_schedule,
    schedule_sensitivity,
    shortage_surplus_cost,
    wind_cost_curve,
    wind_cost_derivative,
)

__all__ = [
    "GmmFit",
    "GmmModel",
    "density_table",
    "fit_gmm_em",
    "gmm_cdf",
    "gmm_pdf",
    "load_gmm_json",
    "load_wind_samples",
    "save_gmm_json",
    "truncated_first_moment",
    "PwlCost",
    "WindCostCurve",
    "build_pwl",
    "build_pwl_cost",
    "critical_fractile",
    "optimal_schedule",
    "schedule_sensitivity",
    "shortage_surplus_cost",
    "wind_cost_curve",
    "wind_cost_derivative",
]
