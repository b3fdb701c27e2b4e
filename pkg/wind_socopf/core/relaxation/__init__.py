from .coefficients import (
    FlowCoefficients,
    TaylorCoefficients,
    approx_branch_flow,
    flow_coefficients,
    taylor_coefficients,
)
from .cuts import BranchCut, CutSet, DeltaState, generate_rolling_cuts
from .dcopf import dc_opf_initializer
from .limits import FULL_CIRCLE, linearize_flow_limits, tangent_angles
from .problem import (
    AssemblyOptions,
    ExactnessDiagnostic,
    IterateValues,
    LimitRows,
    OperatingPoint,
    RelaxationGap,
    SocaProblem,
    VariableIndex,
    assemble_soca_problem,
    exactness_condition,
    extract_iterate,
    relaxation_gap,
)

__all__ = [
    "AssemblyOptions",
    "BranchCut",
    "CutSet",
    "DeltaState",
    "ExactnessDiagnostic",
    "FULL_CIRCLE",
    "FlowCoefficients",
    "IterateValues",
    "LimitRows",
    "OperatingPoint",
    "RelaxationGap",
    "SocaProblem",
    "TaylorCoefficients",
    "VariableIndex",
    "approx_branch_flow",
    "assemble_soca_problem",
    "dc_opf_initializer",
    "exactness_condition",
    "extract_iterate",
    "flow_coefficients",
    "generate_rolling_cuts",
    "linearize_flow_limits",
    "relaxation_gap",
    "taylor_coefficients",
]
