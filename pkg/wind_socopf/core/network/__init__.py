from .model import (
    BranchCoefficients,
    BranchRecord,
    BusRecord,
    BusType,
    GeneratorRecord,
    PowerNetwork,
    WindFarmSpec,
    derive_branch_coefficients,
    patch_zero_resistance,
)
from .matpower import (
    dump_network_json,
    load_case,
    load_network_json,
    network_from_dict,
    network_to_dict,
    parse_matpower_case,
)

__all__ = [
    "BranchCoefficients",
    "BranchRecord",
    "BusRecord",
    "BusType",
    "GeneratorRecord",
    "PowerNetwork",
    "WindFarmSpec",
    "derive_branch_coefficients",
    "patch_zero_resistance",
    "dump_network_json",
    "load_case",
    "load_network_json",
    "network_from_dict",
    "network_to_dict",
    "parse_matpower_case",
]
