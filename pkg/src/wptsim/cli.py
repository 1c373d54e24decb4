"""Command-line interface.

Subcommands: coverage, field, node-sim, design, sweep, validate.
Summaries go to stdout as ``key: value`` lines; tabular data goes to CSV
files. Exit codes: 0 success, 1 validation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys

from . import coverage as cov
from . import harness
from . import node as node_mod
from .rectifier import efficiency


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wptsim",
        description="Wireless power transfer coverage and node-activation simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_grid=True):
        p.add_argument("--scenario", metavar="PATH", help="scenario JSON file (default: built-in reference deployment)")
        p.add_argument("--scheme", choices=["sp1", "sp2", "mp", "mpcsd"], help="override the transmission scheme")
        if with_grid:
            p.add_argument("--grid", type=float, metavar="M", help="override the sample interval")
            p.add_argument("--guard", type=float, metavar="M", help="override the guard band")

    p = sub.add_parser("coverage", help="activation coverage over the line")
    add_common(p)
    p.add_argument("--out", metavar="PATH", help="also write the per-position field CSV")

    p = sub.add_parser("field", help="per-position average power CSV")
    add_common(p)
    p.add_argument("--out", metavar="PATH", help="output CSV path")

    p = sub.add_parser("node-sim", help="time-domain node simulation at one position")
    add_common(p)
    p.add_argument("--position", type=float, metavar="M", help="receiver position (default: midpoint)")
    p.add_argument("--dc-input-w", type=float, metavar="W", help="constant DC input overriding the field")
    p.add_argument("--waveform", choices=["average", "instantaneous"], default="average",
                   help="drive with the capacitor-averaged or the beating rectified power")
    p.add_argument("--duration", type=float, metavar="S", help="simulated span (default: init + judgment window)")
    p.add_argument("--step", type=float, metavar="S", help="integration step (default: burst/100)")
    p.add_argument("--judgment-window", type=float, metavar="S", default=node_mod.DEFAULT_JUDGMENT_WINDOW_S,
                   help="increase-or-decrease window length")
    p.add_argument("--out", metavar="PATH", help="voltage trajectory CSV path")

    p = sub.add_parser("design", help="minimum capacitance and maximum spacing")
    add_common(p, with_grid=False)
    p.add_argument("--preq", type=float, metavar="W", help="required power override")

    p = sub.add_parser("sweep", help="coverage versus required power CSV")
    add_common(p)
    p.add_argument("--preq-sweep", metavar="START,STOP,POINTS",
                   help="log-spaced sweep in watts (default: scenario sweep section)")
    p.add_argument("--out", metavar="PATH", help="output CSV path")

    p = sub.add_parser("validate", help="regulatory compliance report")
    add_common(p, with_grid=False)

    return parser


def _load(args) -> tuple[cov.Scenario, dict[str, str]]:
    paths: dict[str, str] = {}
    if args.scenario:
        scenario = harness.load_scenario(args.scenario)
        with open(args.scenario, "r", encoding="utf-8") as handle:
            paths = harness.output_paths(json.load(handle))
    else:
        scenario = harness.default_scenario()
    scheme = getattr(args, "scheme", None)
    if scheme is not None:
        new_scheme = cov.Scheme(scheme)
        delta_f = scenario.delta_f_hz
        if new_scheme in (cov.Scheme.MP, cov.Scheme.SP1, cov.Scheme.SP2):
            delta_f = 0.0
        elif new_scheme is cov.Scheme.MPCSD and delta_f <= 0.0:
            delta_f = 1000.0
        scenario = dataclasses.replace(scenario, scheme=new_scheme, delta_f_hz=delta_f)
    grid = getattr(args, "grid", None)
    guard = getattr(args, "guard", None)
    if grid is not None or guard is not None:
        geometry = dataclasses.replace(
            scenario.geometry,
            sample_interval_m=grid if grid is not None else scenario.geometry.sample_interval_m,
            guard_band_m=guard if guard is not None else scenario.geometry.guard_band_m,
        )
        scenario = dataclasses.replace(scenario, geometry=geometry)
    return scenario, paths


def _num(value: float) -> str:
    return format(float(value), ".9g")


def _cmd_coverage(args) -> int:
    scenario, paths = _load(args)
    report = cov.compute_coverage(scenario)
    print(f"scheme: {scenario.scheme.value}")
    print(f"grid_points: {len(report.positions_m)}")
    print(f"p_csp_w: {_num(report.p_csp_w)}")
    print(f"coverage: {report.coverage:.3f}")
    print(f"activation_lower_bound: {'true' if report.activation_is_lower_bound else 'false'}")
    out = args.out or paths.get("field_csv")
    if out:
        harness.emit_field_csv(report, out)
        print(f"field_csv: {out}")
    return 0


def _cmd_field(args) -> int:
    scenario, paths = _load(args)
    report = cov.compute_coverage(scenario)
    out = args.out or paths.get("field_csv")
    if not out:
        print("error: field needs --out or an output.field_csv path", file=sys.stderr)
        return 2
    harness.emit_field_csv(report, out)
    print(f"scheme: {scenario.scheme.value}")
    print(f"rows: {len(report.positions_m)}")
    print(f"field_csv: {out}")
    return 0


def _cmd_node_sim(args) -> int:
    scenario, paths = _load(args)
    position = args.position
    if position is None:
        position = scenario.geometry.line_length_m / 2.0
    if args.dc_input_w is not None:
        dc_input = node_mod.constant_input(args.dc_input_w)
        print(f"dc_input_w: {_num(args.dc_input_w)}")
    else:
        dc_input = cov.rectified_input(
            scenario, position, instantaneous=args.waveform == "instantaneous"
        )
        avg = scenario.field_power_w(position)
        print(f"position_m: {_num(position)}")
        print(f"avg_power_w: {_num(avg)}")
        print(f"waveform: {args.waveform}")
    cfg = scenario.node
    duration = args.duration
    if duration is None:
        duration = cfg.sensor_init_time_s + args.judgment_window
    verdict = node_mod.simulate(
        cfg, None, dc_input, duration, args.step, judgment_window_s=args.judgment_window
    )
    print(f"active: {1 if verdict.active else 0}")
    print(f"delta_v_v: {_num(verdict.delta_v_v)}")
    print(f"died: {'true' if verdict.died else 'false'}")
    out = args.out or paths.get("trajectory_csv")
    if out:
        harness.emit_trajectory_csv(verdict, out)
        print(f"trajectory_csv: {out}")
    return 0


def _cmd_design(args) -> int:
    scenario, _ = _load(args)
    p_req = args.preq if args.preq is not None else scenario.resolved_required_power_w()
    eff = efficiency(scenario.rectifier, p_req)
    c_min = node_mod.min_capacitance(scenario.node, p_req, eff)
    print(f"required_power_w: {_num(p_req)}")
    print(f"efficiency_at_required: {_num(eff)}")
    print(f"min_capacitance_f: {_num(c_min)}")
    print(f"max_spacing_sp_m: {_num(cov.max_spacing(cov.Scheme.SP1, scenario.budget, p_req))}")
    print(f"max_spacing_mpcsd_m: {_num(cov.max_spacing(cov.Scheme.MPCSD, scenario.budget, p_req))}")
    return 0


def _cmd_sweep(args) -> int:
    scenario, paths = _load(args)
    if args.preq_sweep:
        try:
            start, stop, points = args.preq_sweep.split(",")
            values = _log_spaced(float(start), float(stop), int(points))
        except ValueError:
            print("error: --preq-sweep expects START_W,STOP_W,POINTS", file=sys.stderr)
            return 2
    else:
        if scenario.sweep is None:
            print("error: scenario has no sweep section and no --preq-sweep given", file=sys.stderr)
            return 2
        values = scenario.sweep.values_w()
    curve = cov.coverage_curve(scenario, values)
    print(f"scheme: {scenario.scheme.value}")
    print(f"points: {len(curve)}")
    out = args.out or paths.get("sweep_csv")
    if out:
        harness.emit_sweep_csv(curve, out)
        print(f"sweep_csv: {out}")
    else:
        for p_req, value in curve:
            print(f"{_num(p_req)},{_num(value)}")
    return 0


def _log_spaced(start_w: float, stop_w: float, points: int) -> list[float]:
    if start_w <= 0 or stop_w < start_w or points < 1:
        raise ValueError("bad sweep range")
    if points == 1:
        return [start_w]
    lo, hi = math.log10(start_w), math.log10(stop_w)
    return [10.0 ** (lo + (hi - lo) * k / (points - 1)) for k in range(points)]


def _cmd_validate(args) -> int:
    scenario, _ = _load(args)
    violations = harness.validate_regulatory(scenario)
    print(f"profile: {harness.JAPAN_920MHZ.name}")
    print(f"violations: {len(violations)}")
    for violation in violations:
        print(f"{violation.kind}: {violation.message}")
    return 1 if violations else 0


_COMMANDS = {
    "coverage": _cmd_coverage,
    "field": _cmd_field,
    "node-sim": _cmd_node_sim,
    "design": _cmd_design,
    "sweep": _cmd_sweep,
    "validate": _cmd_validate,
}


def run_cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return _COMMANDS[args.command](args)
    except harness.ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())
