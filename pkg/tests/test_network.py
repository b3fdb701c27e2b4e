import math

import numpy as np
import pytest

from wind_socopf.core.errors import CaseParseError, NetworkValidationError
from wind_socopf.core.network import (
    BranchRecord,
    BusType,
    WindFarmSpec,
    derive_branch_coefficients,
    load_case,
    network_from_dict,
    network_to_dict,
    parse_matpower_case,
    patch_zero_resistance,
)

CASE_TEMPLATE = """function mpc = tiny
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
{bus_rows}
];
mpc.gen = [
	1	0	0	100	-100	1.0	100	1	200	0;
];
mpc.branch = [
	1	2	0.01	0.1	0.02	0	0	0	0	0	1	-360	360;
];
{gencost}
"""

GENCOST = """mpc.gencost = [
	2	0	0	3	0.02	10	5;
];"""

BUS_ROWS = """	1	3	0	0	0	0	1	1	0	230	1	1.1	0.9;
	2	1	50	20	0	0	1	1	0	230	1	1.1	0.9;"""


def tiny_case(bus_rows: str = BUS_ROWS, gencost: str = GENCOST) -> str:
    return CASE_TEMPLATE.format(bus_rows=bus_rows, gencost=gencost)


def test_bundled_case9_dimensions(case9):
    assert (case9.n_bus, case9.n_branch, case9.n_gen) == (9, 9, 3)
    assert case9.base_MVA == 100.0
    assert case9.slack_bus == 1
    assert case9.buses[0].bus_type == BusType.REF
    assert case9.island_count == 1


def test_case14_dimensions(case14):
    assert (case14.n_bus, case14.n_branch, case14.n_gen) == (14, 20, 5)


def test_per_unit_conversion(case9):
    bus5 = case9.buses[case9.bus_index[5]]
    assert bus5.Pd == pytest.approx(0.9)
    assert bus5.Qd == pytest.approx(0.3)

    gen = case9.generators[0]
    assert gen.P_max == pytest.approx(2.5)
    assert gen.P_min == pytest.approx(0.1)
    # 0.11 $/MW²h, 5 $/MWh on a 100 MVA base
    assert gen.c2 == pytest.approx(1100.0)
    assert gen.c1 == pytest.approx(500.0)
    assert gen.c0 == pytest.approx(150.0)


def test_generation_cost_matches_mw_cost(case9):
    gen_p = np.array([0.9, 1.3, 0.95])
    expected = sum(
        c2 * (100 * p) ** 2 + c1 * 100 * p + c0
        for p, (c2, c1, c0) in zip(gen_p, [(0.11, 5, 150), (0.085, 1.2, 600), (0.1225, 1, 335)])
    )
    assert case9.generation_cost(gen_p) == pytest.approx(expected)


def test_unbounded_angles_get_default_bound(case9):
    for branch in case9.branches:
        assert branch.theta_min == pytest.approx(-math.pi / 3)
        assert branch.theta_max == pytest.approx(math.pi / 3)


def test_load_case_missing_file():
    with pytest.raises(CaseParseError, match="case file not found"):
        load_case("/nonexistent/case_does_not_exist.m")


def test_parse_reports_line_of_bad_entry():
    text = tiny_case().replace("0.01\t0.1", "abc\t0.1")
    with pytest.raises(CaseParseError) as info:
        parse_matpower_case(text)
    assert info.value.line == 12
    assert info.value.to_dict()["line"] == 12


def test_parse_short_row():
    text = tiny_case(bus_rows="	1	3	0	0	0	0	1	1	0	230	1	1.1	0.9;\n	2	1	50	20;")
    with pytest.raises(CaseParseError, match="columns"):
        parse_matpower_case(text)


def test_parse_requires_base_mva():
    with pytest.raises(CaseParseError, match="baseMVA"):
        parse_matpower_case(tiny_case().replace("mpc.baseMVA = 100;", ""))


def test_parse_unterminated_matrix():
    text = tiny_case().split("mpc.gen")[0].replace("];", "")
    with pytest.raises(CaseParseError, match="unterminated"):
        parse_matpower_case(text)


def test_two_reference_buses_rejected():
    rows = BUS_ROWS.replace("	2	1	50", "	2	3	50")
    with pytest.raises(NetworkValidationError, match="reference bus"):
        parse_matpower_case(tiny_case(bus_rows=rows))


def test_missing_gencost_uses_default():
    network = parse_matpower_case(tiny_case(gencost=""))
    gen = network.generators[0]
    assert gen.c2 == pytest.approx(0.01 * 100**2)
    assert gen.c1 == pytest.approx(40.0 * 100)
    assert any("gencost missing" in w for w in network.warnings)


def test_isolated_bus_dropped():
    rows = BUS_ROWS + "\n	3	4	0	0	0	0	1	1	0	230	1	1.1	0.9;"
    network = parse_matpower_case(tiny_case(bus_rows=rows))
    assert network.n_bus == 2
    assert any("isolated" in w for w in network.warnings)


def test_plain_line_coefficients():
    branch = BranchRecord(from_bus=1, to_bus=2, r=0.01, x=0.1, b_ch=0.02)
    c = derive_branch_coefficients(branch)
    g_series = 0.01 / (0.01**2 + 0.1**2)
    assert c.g_f == pytest.approx(g_series)
    assert c.g_t == pytest.approx(g_series)
    assert c.g_c_ij == pytest.approx(g_series)
    assert c.g_c_ji == pytest.approx(g_series)
    assert c.b_c_ij == pytest.approx(c.b_c_ji)
    assert c.b_f - c.b_c_ij == pytest.approx(0.01)


def test_zero_impedance_rejected():
    with pytest.raises(NetworkValidationError):
        derive_branch_coefficients(BranchRecord(from_bus=1, to_bus=2, r=0.0, x=0.0))


def test_patch_zero_resistance(case9):
    patched, count = patch_zero_resistance(case9, r_min=1e-4)
    assert count == 3
    assert all(br.r > 0.0 for br in patched.branches)
    assert all(br.r > 0.0 for br in patch_zero_resistance(patched)[0].branches)
    assert patch_zero_resistance(patched)[1] == 0


def test_scaled_load(case9):
    scaled = case9.scaled_load(1.2)
    assert scaled.bus_array("Pd").sum() == pytest.approx(1.2 * case9.bus_array("Pd").sum())
    assert scaled.bus_array("Qd").sum() == pytest.approx(1.2 * case9.bus_array("Qd").sum())
    assert scaled.generators == case9.generators


def test_network_dict_round_trip(case14):
    assert network_from_dict(network_to_dict(case14)) == case14


@pytest.mark.parametrize("power_factor", [0.9, 1.01])
def test_wind_farm_power_factor_range(power_factor):
    with pytest.raises(NetworkValidationError, match="power factor"):
        WindFarmSpec(bus=1, P_wind_min=0.0, P_wind_max=50.0, power_factor=power_factor, k_L=60, k_H=50)


def test_wind_farm_needs_two_pwl_segments():
    with pytest.raises(NetworkValidationError, match="at least 2 segments"):
        WindFarmSpec(bus=1, P_wind_min=0.0, P_wind_max=50.0, power_factor=1.0, k_L=60, k_H=50, pwl_segments=1)


def test_wind_farm_unknown_bus(case3):
    farm = WindFarmSpec(bus=99, P_wind_min=0.0, P_wind_max=50.0, power_factor=1.0, k_L=60, k_H=50)
    with pytest.raises(NetworkValidationError, match="unknown bus"):
        case3.with_wind_farms((farm,))


def test_external_case118(external_case):
    network = load_case(external_case("case118"))
    assert network.n_bus == 118
