"""Scenario files, regulatory checks, and CSV emission.

Scenario files are JSON with explicit units in every key name. Any key
the schema does not know is rejected, and validation reports every
problem found rather than stopping at the first. Omitted values fall
back to the reference deployment: two 1 W transmitters 6 m apart at
916.8 MHz with a 1 kHz offset, the calibrated rectifier, the case0 node,
and the experimental 3 cm measurement grid.

All emitted text is byte-deterministic: fixed 9-significant-digit
formatting, fixed column order, newline-terminated lines.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .coverage import CoverageReport, Scenario, Scheme, SweepSpec
from .node import NODE_PRESETS, ActivationVerdict, NodeConfig
from .propagation import Geometry, LinkBudget, SPEED_OF_LIGHT_M_S, Transmitter
from .rectifier import RectifierModel

DB_EXACT = "db-exact"
ROUNDED_LINEAR = "rounded-linear"

_TX_GAIN = {DB_EXACT: 10.0 ** (6.0 / 10.0), ROUNDED_LINEAR: 4.0}
_RX_GAIN = {DB_EXACT: 10.0 ** (2.15 / 10.0), ROUNDED_LINEAR: 1.6}

_TOP_KEYS = {
    "use_paper_defaults",
    "scheme",
    "carrier_frequency_hz",
    "delta_f_hz",
    "delta_theta_rad",
    "gain_convention",
    "rx_gain",
    "rx_gain_dbi",
    "required_power_w",
    "transmitters",
    "geometry",
    "rectifier",
    "node",
    "sweep",
    "output",
}
_TX_KEYS = {"position_m", "tx_power_w", "antenna_gain", "antenna_gain_dbi"}
_GEOMETRY_KEYS = {"line_length_m", "sample_interval_m", "guard_band_m"}
_RECTIFIER_KEYS = {
    "form",
    "peak_efficiency",
    "threshold_power_w",
    "anchor_input_w",
    "anchor_output_w",
    "table",
}
_NODE_KEYS = {
    "preset",
    "sleep_power_w",
    "tx_power_consumption_w",
    "duty_cycle_s",
    "tx_duration_s",
    "capacitance_f",
    "v_typ_v",
    "v_min_v",
    "sensor_init_time_s",
    "resume_voltage_v",
}
_SWEEP_KEYS = {"start_dbm", "stop_dbm", "points"}
_OUTPUT_KEYS = {"field_csv", "sweep_csv", "trajectory_csv"}


class ScenarioError(ValueError):
    """Scenario file rejected; ``violations`` lists every problem found."""

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("invalid scenario:\n  " + "\n  ".join(violations))


def watts_to_dbm(power_w: float) -> float:
    if power_w < 0:
        raise ValueError("power_w must be >= 0")
    if power_w == 0.0:
        return -math.inf
    return 10.0 * math.log10(power_w / 1e-3)


def dbm_to_watts(power_dbm: float) -> float:
    return 10.0 ** (power_dbm / 10.0) * 1e-3


@dataclass(frozen=True)
class RegulatoryProfile:
    """Band limits a deployment must respect."""

    name: str
    max_eirp_w: float
    band_hz: tuple[float, float]
    carrier_sense_required: bool

    def __post_init__(self) -> None:
        if self.max_eirp_w <= 0:
            raise ValueError("max_eirp_w must be > 0")
        if self.band_hz[1] <= self.band_hz[0]:
            raise ValueError("band_hz must be a nonempty (low, high) range")


# Passive-tag channels of the Japanese 920 MHz band: 1 W transmit /
# 4 W EIRP ceiling, no carrier sensing required on the power channels.
JAPAN_920MHZ = RegulatoryProfile(
    name="japan-920mhz-passive-tag",
    max_eirp_w=4.0,
    band_hz=(916.0e6, 921.0e6),
    carrier_sense_required=False,
)


@dataclass(frozen=True)
class RegulatoryViolation:
    kind: str  # "eirp" or "band"
    tx_index: int
    message: str


def validate_regulatory(
    scenario: Scenario, profile: RegulatoryProfile = JAPAN_920MHZ
) -> list[RegulatoryViolation]:
    """Check every driven transmitter against the profile.

    Violations are data, not errors: an empty list means compliant.
    """
    violations = []
    for idx, tx in enumerate(scenario.effective_transmitters()):
        if tx.eirp_w > profile.max_eirp_w:
            violations.append(
                RegulatoryViolation(
                    "eirp",
                    idx,
                    f"tx{idx}: EIRP {tx.eirp_w:.6g} W exceeds "
                    f"{profile.max_eirp_w:.6g} W ({profile.name})",
                )
            )
        lo, hi = profile.band_hz
        if not lo <= tx.carrier_frequency_hz <= hi:
            violations.append(
                RegulatoryViolation(
                    "band",
                    idx,
                    f"tx{idx}: carrier {tx.carrier_frequency_hz:.6g} Hz outside "
                    f"[{lo:.6g}, {hi:.6g}] Hz ({profile.name})",
                )
            )
    return violations


def _default_config(convention: str) -> dict:
    return {
        "scheme": "mpcsd",
        "carrier_frequency_hz": 916.8e6,
        "delta_f_hz": None,  # resolved per scheme: 1 kHz for mpcsd, else 0
        "delta_theta_rad": 0.0,
        "rx_gain": _RX_GAIN[convention],
        "required_power_w": 400e-6,
        "geometry": {
            "line_length_m": 6.0,
            # The experimental measurement interval (about a tenth of a
            # wavelength). An interval exactly commensurate with the
            # half-wavelength interference fringes would strobe them.
            "sample_interval_m": 0.03,
            "guard_band_m": 0.0,
        },
        "rectifier": {
            "form": "parametric",
            "peak_efficiency": 0.55,
            "threshold_power_w": None,
            "anchor_input_w": 400e-6,
            "anchor_output_w": 142e-6,
        },
        "node": {
            "preset": "case0",
            "sensor_init_time_s": 15.0,
            "resume_voltage_v": None,
        },
        "sweep": {"start_dbm": -30.0, "stop_dbm": 10.0, "points": 81},
    }


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


class _Validator:
    def __init__(self):
        self.problems: list[str] = []

    def fail(self, message: str) -> None:
        self.problems.append(message)

    def number(self, mapping: dict, key: str, where: str, minimum=None, positive=False):
        value = mapping.get(key)
        if value is None:
            return None
        if not _is_number(value):
            self.fail(f"{where}.{key}: expected a number, got {value!r}")
            return None
        if positive and value <= 0:
            self.fail(f"{where}.{key}: must be > 0, got {value}")
            return None
        if minimum is not None and value < minimum:
            self.fail(f"{where}.{key}: must be >= {minimum}, got {value}")
            return None
        return float(value)

    def unknown_keys(self, mapping: dict, allowed: set[str], where: str) -> None:
        for key in sorted(set(mapping) - allowed):
            self.fail(f"{where}: unknown key {key!r}")


def scenario_from_dict(config: dict) -> Scenario:
    """Validate a raw config mapping and build the scenario it describes."""
    if not isinstance(config, dict):
        raise ScenarioError(["top level: expected a JSON object"])
    v = _Validator()
    v.unknown_keys(config, _TOP_KEYS, "top level")

    convention = config.get("gain_convention", DB_EXACT)
    if convention not in (DB_EXACT, ROUNDED_LINEAR):
        v.fail(f"gain_convention: expected {DB_EXACT!r} or {ROUNDED_LINEAR!r}, got {convention!r}")
        convention = DB_EXACT
    defaults = _default_config(convention)

    flag = config.get("use_paper_defaults")
    if flag is not None and not isinstance(flag, bool):
        v.fail("use_paper_defaults: expected a boolean")

    scheme_name = config.get("scheme", defaults["scheme"])
    scheme = None
    try:
        scheme = Scheme(scheme_name)
    except ValueError:
        v.fail(f"scheme: expected one of sp1/sp2/mp/mpcsd, got {scheme_name!r}")

    carrier = v.number(config, "carrier_frequency_hz", "top level", positive=True)
    if carrier is None:
        carrier = defaults["carrier_frequency_hz"]
    delta_theta = v.number(config, "delta_theta_rad", "top level")
    if delta_theta is None:
        delta_theta = defaults["delta_theta_rad"]

    if "delta_f_hz" in config:
        delta_f = v.number(config, "delta_f_hz", "top level", minimum=0.0)
        if delta_f is None:
            delta_f = 0.0
    else:
        delta_f = 1000.0 if scheme is Scheme.MPCSD or scheme is None else 0.0
    if scheme is Scheme.MP and delta_f != 0.0:
        v.fail(f"scheme mp requires delta_f_hz = 0, got {delta_f}")
    if scheme is Scheme.MPCSD and delta_f <= 0.0:
        v.fail(f"scheme mpcsd requires delta_f_hz > 0, got {delta_f}")

    if "rx_gain" in config and "rx_gain_dbi" in config:
        v.fail("top level: give rx_gain or rx_gain_dbi, not both")
    rx_gain = v.number(config, "rx_gain", "top level", positive=True)
    rx_gain_dbi = v.number(config, "rx_gain_dbi", "top level")
    if rx_gain is None:
        rx_gain = 10.0 ** (rx_gain_dbi / 10.0) if rx_gain_dbi is not None else defaults["rx_gain"]

    required_power = None
    if "required_power_w" in config:
        if config["required_power_w"] is not None:
            required_power = v.number(config, "required_power_w", "top level", positive=True)
    else:
        required_power = defaults["required_power_w"]

    geometry_cfg = dict(defaults["geometry"])
    user_geom = config.get("geometry", {})
    if not isinstance(user_geom, dict):
        v.fail("geometry: expected an object")
        user_geom = {}
    v.unknown_keys(user_geom, _GEOMETRY_KEYS, "geometry")
    geometry_cfg.update({k: user_geom[k] for k in _GEOMETRY_KEYS if k in user_geom})
    line_length = v.number(geometry_cfg, "line_length_m", "geometry", positive=True)
    interval = None
    if geometry_cfg.get("sample_interval_m") is not None:
        interval = v.number(geometry_cfg, "sample_interval_m", "geometry", positive=True)
    if interval is None:
        interval = SPEED_OF_LIGHT_M_S / carrier / 10.0  # tenth of a wavelength
    guard = v.number(geometry_cfg, "guard_band_m", "geometry", minimum=0.0)
    geometry = None
    if line_length is not None and guard is not None:
        if interval >= line_length:
            v.fail(f"geometry.sample_interval_m: must be < line_length_m, got {interval}")
        elif 2 * guard >= line_length:
            v.fail("geometry.guard_band_m: guard bands leave no samplable span")
        else:
            geometry = Geometry(line_length, interval, guard)

    txs = _build_transmitters(v, config, convention, carrier, line_length)
    rectifier = _build_rectifier(v, config, defaults["rectifier"])
    node_cfg = _build_node(v, config, defaults["node"])
    sweep = _build_sweep(v, config, defaults["sweep"])
    _check_output(v, config)

    if scheme in (Scheme.SP2, Scheme.MP, Scheme.MPCSD) and txs is not None and len(txs) < 2:
        v.fail(f"transmitters: scheme {scheme.value} needs at least 2, got {len(txs)}")

    if v.problems:
        raise ScenarioError(v.problems)

    budget = LinkBudget.for_transmitter(txs[0], rx_gain)
    return Scenario(
        geometry=geometry,
        budget=budget,
        txs=txs,
        scheme=scheme,
        delta_f_hz=delta_f,
        delta_theta_rad=delta_theta,
        rectifier=rectifier,
        node=node_cfg,
        required_power_w=required_power,
        sweep=sweep,
    )


def _build_transmitters(v, config, convention, carrier, line_length):
    entries = config.get("transmitters")
    if entries is None:
        length = line_length if line_length is not None else 6.0
        entries = [{"position_m": 0.0}, {"position_m": length}]
    if not isinstance(entries, list) or not entries:
        v.fail("transmitters: expected a nonempty list")
        return None
    txs = []
    for idx, entry in enumerate(entries):
        where = f"transmitters[{idx}]"
        if not isinstance(entry, dict):
            v.fail(f"{where}: expected an object")
            continue
        v.unknown_keys(entry, _TX_KEYS, where)
        position = v.number(entry, "position_m", where)
        if "position_m" not in entry:
            v.fail(f"{where}: position_m is required")
            continue
        power = v.number(entry, "tx_power_w", where, positive=True)
        if power is None:
            if "tx_power_w" in entry:
                continue  # already reported
            power = 1.0
        if "antenna_gain" in entry and "antenna_gain_dbi" in entry:
            v.fail(f"{where}: give antenna_gain or antenna_gain_dbi, not both")
        gain = v.number(entry, "antenna_gain", where, positive=True)
        gain_dbi = v.number(entry, "antenna_gain_dbi", where)
        if gain is None:
            gain = 10.0 ** (gain_dbi / 10.0) if gain_dbi is not None else _TX_GAIN[convention]
        if position is None:
            continue
        if line_length is not None and not 0.0 <= position <= line_length:
            v.fail(f"{where}: position_m {position} outside [0, {line_length}]")
            continue
        txs.append(Transmitter(position, power, gain, carrier))
    return tuple(txs) if txs else None


def _build_rectifier(v, config, defaults):
    cfg = dict(defaults)
    user = config.get("rectifier", {})
    if not isinstance(user, dict):
        v.fail("rectifier: expected an object")
        user = {}
    v.unknown_keys(user, _RECTIFIER_KEYS, "rectifier")
    cfg.update({k: user[k] for k in _RECTIFIER_KEYS if k in user})
    form = cfg.get("form")
    if form == "tabulated":
        table = cfg.get("table")
        if not isinstance(table, list) or len(table) < 2:
            v.fail("rectifier.table: tabulated form needs >= 2 [input_w, efficiency] pairs")
            return None
        points = []
        for i, pair in enumerate(table):
            if (
                not isinstance(pair, list)
                or len(pair) != 2
                or not all(_is_number(x) for x in pair)
            ):
                v.fail(f"rectifier.table[{i}]: expected [input_w, efficiency]")
                return None
            points.append((float(pair[0]), float(pair[1])))
        try:
            return RectifierModel.tabulated(points)
        except ValueError as exc:
            v.fail(f"rectifier.table: {exc}")
            return None
    if form != "parametric":
        v.fail(f"rectifier.form: expected 'parametric' or 'tabulated', got {form!r}")
        return None
    peak = v.number(cfg, "peak_efficiency", "rectifier", positive=True)
    if peak is None:
        return None
    try:
        if cfg.get("threshold_power_w") is not None:
            threshold = v.number(cfg, "threshold_power_w", "rectifier", positive=True)
            if threshold is None:
                return None
            return RectifierModel.parametric(peak, threshold)
        anchor_in = v.number(cfg, "anchor_input_w", "rectifier", positive=True)
        anchor_out = v.number(cfg, "anchor_output_w", "rectifier", positive=True)
        if anchor_in is None or anchor_out is None:
            return None
        return RectifierModel.calibrated(peak, anchor_in, anchor_out)
    except ValueError as exc:
        v.fail(f"rectifier: {exc}")
        return None


def _build_node(v, config, defaults):
    user = config.get("node", {})
    if not isinstance(user, dict):
        v.fail("node: expected an object")
        user = {}
    v.unknown_keys(user, _NODE_KEYS, "node")
    preset_name = user.get("preset", defaults.get("preset"))
    if preset_name is not None and preset_name not in NODE_PRESETS:
        v.fail(f"node.preset: unknown preset {preset_name!r}")
        preset_name = "case0"
    base = NODE_PRESETS[preset_name]
    values = {
        "sleep_power_w": base.sleep_power_w,
        "tx_power_consumption_w": base.tx_power_consumption_w,
        "duty_cycle_s": base.duty_cycle_s,
        "tx_duration_s": base.tx_duration_s,
        "capacitance_f": base.capacitance_f,
        "v_typ_v": base.v_typ_v,
        "v_min_v": base.v_min_v,
        "sensor_init_time_s": defaults["sensor_init_time_s"],
        "resume_voltage_v": defaults["resume_voltage_v"],
    }
    for key in _NODE_KEYS - {"preset"}:
        if key in user:
            if user[key] is None and key == "resume_voltage_v":
                values[key] = None
            else:
                value = v.number(user, key, "node")
                if value is not None:
                    values[key] = value
    try:
        return NodeConfig(**values)
    except ValueError as exc:
        v.fail(f"node: {exc}")
        return None


def _build_sweep(v, config, defaults):
    cfg = dict(defaults)
    user = config.get("sweep", {})
    if not isinstance(user, dict):
        v.fail("sweep: expected an object")
        user = {}
    v.unknown_keys(user, _SWEEP_KEYS, "sweep")
    cfg.update({k: user[k] for k in _SWEEP_KEYS if k in user})
    start = v.number(cfg, "start_dbm", "sweep")
    stop = v.number(cfg, "stop_dbm", "sweep")
    points = cfg.get("points")
    if not isinstance(points, int) or isinstance(points, bool) or points < 1:
        v.fail(f"sweep.points: expected a positive integer, got {points!r}")
        return None
    if start is None or stop is None:
        return None
    if stop < start:
        v.fail(f"sweep: stop_dbm {stop} below start_dbm {start}")
        return None
    return SweepSpec(start, stop, points)


def _check_output(v, config):
    user = config.get("output", {})
    if not isinstance(user, dict):
        v.fail("output: expected an object")
        return
    v.unknown_keys(user, _OUTPUT_KEYS, "output")
    for key, value in user.items():
        if key in _OUTPUT_KEYS and not isinstance(value, str):
            v.fail(f"output.{key}: expected a path string")


def output_paths(config: dict) -> dict[str, str]:
    """Optional per-command output paths declared in a raw config mapping."""
    section = config.get("output", {})
    if not isinstance(section, dict):
        return {}
    return {k: v for k, v in section.items() if k in _OUTPUT_KEYS and isinstance(v, str)}


def load_scenario(path: str) -> Scenario:
    """Parse and validate a scenario file."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            config = json.load(handle)
    except OSError as exc:
        raise ScenarioError([f"cannot read {path}: {exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}"]) from exc
    return scenario_from_dict(config)


def default_scenario() -> Scenario:
    """The reference deployment with nothing overridden."""
    return scenario_from_dict({})


def scenario_to_dict(scenario: Scenario) -> dict:
    """Serialize a scenario to the file schema (fully explicit values)."""
    rect_model = scenario.rectifier
    if rect_model.form == "parametric":
        rect_cfg = {
            "form": "parametric",
            "peak_efficiency": rect_model.peak_efficiency,
            "threshold_power_w": rect_model.threshold_power_w,
        }
    else:
        rect_cfg = {"form": "tabulated", "table": [[p, g] for p, g in rect_model.table]}
    node = scenario.node
    out = {
        "scheme": scenario.scheme.value,
        "carrier_frequency_hz": scenario.txs[0].carrier_frequency_hz,
        "delta_f_hz": scenario.delta_f_hz,
        "delta_theta_rad": scenario.delta_theta_rad,
        "rx_gain": scenario.budget.rx_gain,
        "required_power_w": scenario.required_power_w,
        "transmitters": [
            {
                "position_m": tx.position_m,
                "tx_power_w": tx.tx_power_w,
                "antenna_gain": tx.antenna_gain,
            }
            for tx in scenario.txs
        ],
        "geometry": {
            "line_length_m": scenario.geometry.line_length_m,
            "sample_interval_m": scenario.geometry.sample_interval_m,
            "guard_band_m": scenario.geometry.guard_band_m,
        },
        "rectifier": rect_cfg,
        "node": {
            "sleep_power_w": node.sleep_power_w,
            "tx_power_consumption_w": node.tx_power_consumption_w,
            "duty_cycle_s": node.duty_cycle_s,
            "tx_duration_s": node.tx_duration_s,
            "capacitance_f": node.capacitance_f,
            "v_typ_v": node.v_typ_v,
            "v_min_v": node.v_min_v,
            "sensor_init_time_s": node.sensor_init_time_s,
            "resume_voltage_v": node.resume_voltage_v,
        },
    }
    if scenario.sweep is not None:
        out["sweep"] = {
            "start_dbm": scenario.sweep.start_dbm,
            "stop_dbm": scenario.sweep.stop_dbm,
            "points": scenario.sweep.points,
        }
    return out


def save_scenario(scenario: Scenario, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(scenario_to_dict(scenario), handle, indent=2, sort_keys=True)
        handle.write("\n")


def _fmt(value) -> str:
    return format(float(value), ".9g")


def emit_field_csv(report: CoverageReport, path: str) -> None:
    """Per-position field rows: position, power (W and dBm), active flag."""
    if not report.positions_m:
        raise ValueError("report has no positions")
    rows = sorted(zip(report.positions_m, report.avg_power_w, report.active))
    lines = ["position_m,avg_power_w,avg_power_dbm,active"]
    for position, power, active in rows:
        lines.append(
            f"{_fmt(position)},{_fmt(power)},{_fmt(watts_to_dbm(power))},{int(active)}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")


def emit_sweep_csv(points: list[tuple[float, float]], path: str) -> None:
    """Coverage-versus-required-power rows."""
    if not points:
        raise ValueError("no sweep points")
    lines = ["p_req_w,p_req_dbm,coverage"]
    for p_req, cov in points:
        lines.append(f"{_fmt(p_req)},{_fmt(watts_to_dbm(p_req))},{_fmt(cov)}")
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")


def emit_trajectory_csv(verdict: ActivationVerdict, path: str) -> None:
    """Capacitor voltage trace rows."""
    lines = ["time_s,voltage_v"]
    for t, volt in zip(verdict.times_s, verdict.voltages_v):
        lines.append(f"{_fmt(t)},{_fmt(volt)}")
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")
