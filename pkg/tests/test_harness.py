import json
import math

import pytest

from conftest import make_scenario

from wptsim import Scheme, average_consumed_power, compute_coverage, required_power
from wptsim.harness import (
    JAPAN_920MHZ,
    RegulatoryProfile,
    ScenarioError,
    dbm_to_watts,
    default_scenario,
    emit_field_csv,
    emit_sweep_csv,
    load_scenario,
    output_paths,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    validate_regulatory,
    watts_to_dbm,
)


def write(tmp_path, config, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return str(path)


def test_paper_defaults(tmp_path):
    scenario = load_scenario(write(tmp_path, {"use_paper_defaults": True}))
    assert scenario.scheme is Scheme.MPCSD
    assert scenario.delta_f_hz == 1000.0
    assert len(scenario.txs) == 2
    assert [tx.position_m for tx in scenario.txs] == [0.0, 6.0]
    assert all(tx.tx_power_w == 1.0 for tx in scenario.txs)
    assert scenario.txs[0].carrier_frequency_hz == 916.8e6
    assert scenario.txs[0].antenna_gain == pytest.approx(10 ** 0.6)
    assert scenario.budget.rx_gain == pytest.approx(10 ** 0.215)
    assert scenario.geometry.line_length_m == 6.0
    assert scenario.geometry.sample_interval_m == 0.03
    assert scenario.node.duty_cycle_s == 1.0
    assert average_consumed_power(scenario.node) == pytest.approx(142e-6, rel=0.03)
    assert scenario.required_power_w == 400e-6
    assert scenario.sweep.points == 81
    # Calibration: the required power solves to the configured value.
    assert required_power(scenario.rectifier, 142e-6) == pytest.approx(400e-6, abs=2e-9)


def test_rounded_gain_convention():
    scenario = scenario_from_dict({"gain_convention": "rounded-linear"})
    assert scenario.txs[0].antenna_gain == 4.0
    assert scenario.budget.rx_gain == 1.6


def test_unknown_keys_rejected():
    with pytest.raises(ScenarioError) as info:
        scenario_from_dict({"schema": "mpcsd"})
    assert any("unknown key 'schema'" in v for v in info.value.violations)
    with pytest.raises(ScenarioError):
        scenario_from_dict({"geometry": {"length_m": 6.0}})
    with pytest.raises(ScenarioError):
        scenario_from_dict({"transmitters": [{"position_m": 0.0, "power": 1.0}]})


def test_violations_reported_exhaustively():
    config = {
        "scheme": "mpcsd",
        "delta_f_hz": 0.0,  # offset scheme without an offset
        "transmitters": [
            {"position_m": 0.0, "tx_power_w": -1.0},  # negative power
            {"position_m": 6.0},
        ],
    }
    with pytest.raises(ScenarioError) as info:
        scenario_from_dict(config)
    text = "\n".join(info.value.violations)
    assert "delta_f_hz" in text
    assert "tx_power_w" in text
    assert len(info.value.violations) >= 2


def test_scheme_offset_defaults():
    assert scenario_from_dict({"scheme": "mp"}).delta_f_hz == 0.0
    assert scenario_from_dict({"scheme": "sp1"}).delta_f_hz == 0.0
    assert scenario_from_dict({"scheme": "mpcsd"}).delta_f_hz == 1000.0
    with pytest.raises(ScenarioError):
        scenario_from_dict({"scheme": "mp", "delta_f_hz": 500.0})


def test_tx_entry_overrides():
    config = {
        "transmitters": [
            {"position_m": 0.0, "antenna_gain_dbi": 3.0},
            {"position_m": 5.0, "tx_power_w": 0.5},
        ],
        "geometry": {"line_length_m": 5.0},
    }
    scenario = scenario_from_dict(config)
    assert scenario.txs[0].antenna_gain == pytest.approx(10 ** 0.3)
    assert scenario.txs[1].tx_power_w == 0.5
    with pytest.raises(ScenarioError):
        scenario_from_dict(
            {"transmitters": [{"position_m": 0.0, "antenna_gain": 4.0, "antenna_gain_dbi": 6.0}]}
        )
    with pytest.raises(ScenarioError):
        scenario_from_dict({"transmitters": [{"tx_power_w": 1.0}]})  # position required


def test_tabulated_rectifier_config():
    config = {
        "rectifier": {
            "form": "tabulated",
            "table": [[1e-4, 0.2], [4e-4, 0.355], [1e-3, 0.47]],
        }
    }
    scenario = scenario_from_dict(config)
    assert scenario.rectifier.form == "tabulated"
    assert len(scenario.rectifier.table) == 3
    with pytest.raises(ScenarioError):
        scenario_from_dict({"rectifier": {"form": "tabulated"}})
    with pytest.raises(ScenarioError):
        scenario_from_dict({"rectifier": {"form": "exotic"}})


def test_node_presets_and_overrides():
    scenario = scenario_from_dict({"node": {"preset": "case2"}})
    assert average_consumed_power(scenario.node) == pytest.approx(2.35e-3, rel=1e-9)
    scenario = scenario_from_dict({"node": {"capacitance_f": 1e-3}})
    assert scenario.node.capacitance_f == 1e-3
    assert scenario.node.sleep_power_w == 4.23e-6  # rest still case0
    with pytest.raises(ScenarioError):
        scenario_from_dict({"node": {"preset": "case9"}})
    with pytest.raises(ScenarioError):
        scenario_from_dict({"node": {"v_min_v": 2.5}})  # above v_typ


def test_sweep_section_validation():
    with pytest.raises(ScenarioError):
        scenario_from_dict({"sweep": {"points": 0}})
    with pytest.raises(ScenarioError):
        scenario_from_dict({"sweep": {"start_dbm": 10.0, "stop_dbm": -30.0}})
    scenario = scenario_from_dict({"sweep": {"points": 5}})
    assert scenario.sweep.points == 5 and scenario.sweep.start_dbm == -30.0


def test_geometry_validation():
    with pytest.raises(ScenarioError):
        scenario_from_dict({"geometry": {"guard_band_m": 3.0}})
    with pytest.raises(ScenarioError):
        scenario_from_dict({"geometry": {"sample_interval_m": 7.0}})
    # Omitted interval falls back to a tenth of the wavelength.
    scenario = scenario_from_dict({"geometry": {"sample_interval_m": None}})
    assert scenario.geometry.sample_interval_m == pytest.approx(0.0327, rel=1e-2)


def test_file_errors(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    with pytest.raises(ScenarioError) as info:
        load_scenario(str(bad))
    assert any(":1:" in v for v in info.value.violations)  # line info


def test_round_trip_default(tmp_path):
    scenario = default_scenario()
    path = tmp_path / "out.json"
    save_scenario(scenario, str(path))
    assert load_scenario(str(path)) == scenario


def test_round_trip_custom(tmp_path):
    config = {
        "scheme": "mp",
        "delta_f_hz": 0.0,
        "delta_theta_rad": 0.7,
        "gain_convention": "rounded-linear",
        "geometry": {"line_length_m": 4.0, "sample_interval_m": 0.05, "guard_band_m": 0.5},
        "transmitters": [{"position_m": 0.0}, {"position_m": 4.0, "tx_power_w": 0.8}],
        "rectifier": {"form": "tabulated", "table": [[1e-4, 0.2], [1e-3, 0.47]]},
        "node": {"preset": "case3", "sensor_init_time_s": 10.0},
        "required_power_w": 2.5e-4,
    }
    scenario = scenario_from_dict(config)
    path = tmp_path / "custom.json"
    save_scenario(scenario, str(path))
    assert load_scenario(str(path)) == scenario


def test_output_paths_section():
    assert output_paths({"output": {"field_csv": "f.csv", "sweep_csv": "s.csv"}}) == {
        "field_csv": "f.csv",
        "sweep_csv": "s.csv",
    }
    assert output_paths({}) == {}
    with pytest.raises(ScenarioError):
        scenario_from_dict({"output": {"field_csv": 7}})


def test_dbm_helpers():
    assert watts_to_dbm(1e-3) == pytest.approx(0.0)
    assert watts_to_dbm(400e-6) == pytest.approx(-3.979, abs=1e-3)
    assert watts_to_dbm(0.0) == -math.inf
    assert dbm_to_watts(watts_to_dbm(2.7e-4)) == pytest.approx(2.7e-4, rel=1e-12)
    with pytest.raises(ValueError):
        watts_to_dbm(-1.0)


def test_regulatory_compliance_reference():
    # 1 W into 6 dBi is within a 6 dB margin of nothing: EIRP just under
    # the 4 W ceiling, carrier inside the band.
    assert validate_regulatory(default_scenario()) == []


def test_regulatory_eirp_violation():
    scenario = scenario_from_dict(
        {"transmitters": [{"position_m": 0.0, "tx_power_w": 2.0}, {"position_m": 6.0}]}
    )
    violations = validate_regulatory(scenario)
    assert [v.kind for v in violations] == ["eirp"]
    assert violations[0].tx_index == 0


def test_regulatory_band_violation():
    scenario = scenario_from_dict({"carrier_frequency_hz": 950e6})
    kinds = {v.kind for v in validate_regulatory(scenario)}
    assert kinds == {"band"}


def test_regulatory_profile_fields():
    assert JAPAN_920MHZ.max_eirp_w == 4.0
    assert not JAPAN_920MHZ.carrier_sense_required
    with pytest.raises(ValueError):
        RegulatoryProfile("x", 0.0, (1.0, 2.0), False)
    with pytest.raises(ValueError):
        RegulatoryProfile("x", 4.0, (2.0, 1.0), False)


def test_field_csv_shape(tmp_path):
    scenario = make_scenario(Scheme.MPCSD)
    report = compute_coverage(scenario)
    path = tmp_path / "field.csv"
    emit_field_csv(report, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "position_m,avg_power_w,avg_power_dbm,active"
    geometry = scenario.geometry
    expected_rows = math.floor(
        (geometry.line_length_m - 2 * geometry.guard_band_m) / geometry.sample_interval_m
    ) + 1
    assert len(lines) - 1 == expected_rows
    actives = {row.split(",")[3] for row in lines[1:]}
    assert actives <= {"0", "1"}
    positions = [float(row.split(",")[0]) for row in lines[1:]]
    assert positions == sorted(positions)
    # Worst point of the offset scheme: about -0.1 dBm at the middle.
    row_at_3m = next(row for row in lines[1:] if row.split(",")[0] == "3")
    assert float(row_at_3m.split(",")[2]) == pytest.approx(-0.075, abs=0.005)


def test_field_csv_determinism(tmp_path):
    report = compute_coverage(make_scenario(Scheme.MP))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_field_csv(report, str(a))
    emit_field_csv(report, str(b))
    assert a.read_bytes() == b.read_bytes()


def test_sweep_csv(tmp_path):
    points = [(1e-6, 1.0), (1e-4, 0.8), (1e-2, 0.1)]
    path = tmp_path / "sweep.csv"
    emit_sweep_csv(points, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "p_req_w,p_req_dbm,coverage"
    assert lines[1] == "1e-06,-30,1"
    with pytest.raises(ValueError):
        emit_sweep_csv([], str(path))
