import dataclasses
import math

import numpy as np
import pytest

from wptsim import (
    Mode,
    NODE_PRESETS,
    NodeConfig,
    NodeState,
    average_consumed_power,
    constant_input,
    consumed_power_at,
    default_model,
    dc_output,
    efficiency,
    min_capacitance,
    recover_efficiency,
    simulate,
    sleep_charge_trace,
    step_state_machine,
)

AVG_CASE0_W = 1.421877e-4  # (4.23e-6 * 0.99 + 13.8e-3 * 0.01) / 1
MIN_CAP_F = 6.070222222222222e-4  # 2 * 0.01 * (13.8e-3 - 142e-6) / (2.3^2 - 2.2^2)


def test_consumption_profile(node_cfg):
    assert consumed_power_at(node_cfg, 0.5) == 4.23e-6
    assert consumed_power_at(node_cfg, 0.995) == 13.8e-3
    assert consumed_power_at(node_cfg, 12.9951) == 13.8e-3
    with pytest.raises(ValueError):
        consumed_power_at(node_cfg, -0.1)


def test_consumption_periodicity(node_cfg):
    for t in (0.25, 0.993, 1.5, 7.31):
        assert consumed_power_at(node_cfg, t) == consumed_power_at(node_cfg, t + 1.0)


def test_average_consumed_power_case0(node_cfg):
    avg = average_consumed_power(node_cfg)
    assert avg == pytest.approx(AVG_CASE0_W, rel=1e-12)
    assert avg == pytest.approx(142e-6, rel=0.03)


def test_average_degenerate_and_linear(node_cfg):
    flat = NodeConfig(1e-3, 1e-3 * (1 + 1e-9), 1.0, 0.01, 50e-3, 2.3, 2.2)
    assert average_consumed_power(flat) == pytest.approx(1e-3, rel=1e-9)
    # With negligible sleep power, halving the burst halves the average.
    lean = NodeConfig(1e-12, 13.8e-3, 1.0, 0.01, 50e-3, 2.3, 2.2)
    half = dataclasses.replace(lean, tx_duration_s=0.005)
    assert average_consumed_power(half) == pytest.approx(
        average_consumed_power(lean) / 2, rel=1e-6
    )


def test_average_matches_long_run_time_average(node_cfg):
    # Midpoint sampling never lands on the profile discontinuities.
    step = node_cfg.tx_duration_s / 100
    n = round(7 * node_cfg.duty_cycle_s / step)
    times = (np.arange(n) + 0.5) * step
    values = np.array([consumed_power_at(node_cfg, float(t)) for t in times])
    assert float(values.mean()) == pytest.approx(average_consumed_power(node_cfg), rel=1e-9)


def test_min_capacitance_reference(node_cfg):
    c_min = min_capacitance(node_cfg, 400e-6, 0.355)
    assert c_min == pytest.approx(MIN_CAP_F, rel=1e-9)
    assert c_min == pytest.approx(607e-6, rel=0.02)


def test_min_capacitance_no_deficit(node_cfg):
    # Supply matching the burst leaves nothing to buffer.
    p_req = node_cfg.tx_power_consumption_w / 0.5
    assert min_capacitance(node_cfg, p_req, 0.5) == 0.0


def test_min_capacitance_linear_in_burst_length(node_cfg):
    doubled = dataclasses.replace(node_cfg, tx_duration_s=2 * node_cfg.tx_duration_s)
    assert min_capacitance(doubled, 400e-6, 0.355) == pytest.approx(
        2 * min_capacitance(node_cfg, 400e-6, 0.355), rel=1e-12
    )


def test_min_capacitance_validation(node_cfg):
    with pytest.raises(ValueError):
        min_capacitance(node_cfg, 0.0, 0.355)
    with pytest.raises(ValueError):
        min_capacitance(node_cfg, 400e-6, 1.5)


def test_config_validation():
    with pytest.raises(ValueError):
        NodeConfig(4e-6, 13.8e-3, 1.0, 1.5, 50e-3, 2.3, 2.2)  # burst > cycle
    with pytest.raises(ValueError):
        NodeConfig(13.8e-3, 4e-6, 1.0, 0.01, 50e-3, 2.3, 2.2)  # sleep > burst
    with pytest.raises(ValueError):
        NodeConfig(4e-6, 13.8e-3, 1.0, 0.01, 0.0, 2.3, 2.2)
    with pytest.raises(ValueError):
        NodeConfig(4e-6, 13.8e-3, 1.0, 0.01, 50e-3, 2.2, 2.3)  # window inverted


def test_presets_reproduce_reported_averages():
    assert average_consumed_power(NODE_PRESETS["case0"]) == pytest.approx(142e-6, rel=0.03)
    assert average_consumed_power(NODE_PRESETS["case1"]) == pytest.approx(5.89e-3, rel=1e-9)
    assert average_consumed_power(NODE_PRESETS["case2"]) == pytest.approx(2.35e-3, rel=1e-9)
    assert average_consumed_power(NODE_PRESETS["case3"]) == pytest.approx(3.72e-3, rel=1e-9)
    # The +13 dBm variant raises the data segment by 35 mA * 2.3 V * 40%.
    assert NODE_PRESETS["case4"].tx_power_consumption_w == pytest.approx(46.0e-3, rel=1e-9)


def test_verdict_flips_around_average(node_cfg):
    avg = average_consumed_power(node_cfg)
    assert simulate(node_cfg, None, constant_input(1.005 * avg), 35.0).active
    assert not simulate(node_cfg, None, constant_input(0.995 * avg), 35.0).active


def test_verdict_consistency_over_input_range(node_cfg):
    avg = average_consumed_power(node_cfg)
    for factor in (0.5, 0.9, 0.99, 1.01, 1.1, 2.0):
        verdict = simulate(node_cfg, None, constant_input(factor * avg), 35.0)
        assert verdict.active == (factor >= 1.0)


def test_zero_input_decays_monotonically(node_cfg):
    verdict = simulate(node_cfg, None, constant_input(0.0), 35.0)
    assert not verdict.active
    assert not verdict.died  # 50 mF rides out 35 s easily
    assert np.all(np.diff(verdict.voltages_v) <= 1e-15)
    assert verdict.delta_v_v < 0


def test_simulate_starts_at_typical_voltage(node_cfg):
    verdict = simulate(node_cfg, None, constant_input(0.0), 35.0)
    assert verdict.voltages_v[0] == node_cfg.v_typ_v
    assert verdict.times_s[0] == 0.0 and verdict.times_s[-1] == pytest.approx(35.0)


def test_simulate_argument_validation(node_cfg):
    with pytest.raises(ValueError):
        simulate(node_cfg, None, constant_input(1e-4), 35.0, step_s=5e-3)  # > burst/10
    with pytest.raises(ValueError):
        simulate(node_cfg, None, constant_input(1e-4), 10.0)  # < init + window
    with pytest.raises(ValueError):
        simulate(node_cfg, None, constant_input(-1e-4), 35.0)


def test_energy_conservation_against_reference(node_cfg):
    def wavy(t):
        t = np.asarray(t, dtype=float)
        return 2e-4 * (1.0 + 0.5 * np.sin(2 * math.pi * 0.37 * t))

    verdict = simulate(node_cfg, None, wavy, 35.0)
    u = verdict.voltages_v**2
    stored = node_cfg.capacitance_f / 2 * (u[-1] - u[0])
    # Reference: fine trapezoid of the smooth input, exact closed form for
    # the piecewise-constant consumption over 35 whole cycles.
    ts = np.linspace(0.0, 35.0, 3_500_001)
    supplied = np.trapezoid(wavy(ts), ts)
    consumed = 35.0 * average_consumed_power(node_cfg)
    assert stored == pytest.approx(supplied - consumed, rel=1e-3)


def test_capacitance_threshold_around_burst(node_cfg):
    # Start with the burst imminent at the typical voltage: 10% under the
    # minimum capacitance dips below cutoff, 10% over survives.
    avg = average_consumed_power(node_cfg)
    c_min = min_capacitance(node_cfg, 400e-6, 0.355)
    for factor, dies in ((0.9, True), (1.1, False)):
        cfg = dataclasses.replace(node_cfg, capacitance_f=factor * c_min)
        state = NodeState(Mode.SLEEP_SENSOR_ONLY, cfg.v_typ_v, cfg.sleep_duration_s)
        verdict = simulate(cfg, state, constant_input(avg), 3.0, judgment_window_s=1.0)
        assert verdict.died == dies
        assert (verdict.voltages_v.min() < cfg.v_min_v) == dies


def test_dead_node_recovers_and_resumes(node_cfg):
    state = NodeState(Mode.DEAD, 2.25, 0.0)
    verdict = simulate(node_cfg, state, constant_input(5e-3), 30.0, judgment_window_s=5.0)
    assert verdict.died  # started dead
    assert verdict.active
    assert verdict.voltages_v[-1] > node_cfg.v_typ_v
    # After recovery the duty cycling resumes: bursts pull the voltage
    # down measurably within single steps.
    assert np.min(np.diff(verdict.voltages_v)) < 0


def test_constant_input_shapes():
    f = constant_input(2e-4)
    assert float(f(1.0)) == 2e-4
    out = f(np.array([0.0, 1.0, 2.0]))
    assert out.shape == (3,) and np.all(out == 2e-4)


def test_state_machine_cycle(node_cfg):
    start = NodeState(Mode.SLEEP_SENSOR_ONLY, 2.3, 0.0)
    burst = step_state_machine(node_cfg, start)
    assert burst.mode is Mode.TX_ACTIVE
    assert burst.clock_s == pytest.approx(node_cfg.sleep_duration_s)
    back = step_state_machine(node_cfg, burst)
    assert back.mode is Mode.SLEEP_SENSOR_ONLY
    assert back.clock_s == pytest.approx(node_cfg.duty_cycle_s)
    # Next cycle's burst boundary.
    again = step_state_machine(node_cfg, back)
    assert again.mode is Mode.TX_ACTIVE
    assert again.clock_s == pytest.approx(node_cfg.duty_cycle_s + node_cfg.sleep_duration_s)


def test_state_machine_boundary(node_cfg):
    eps = 1e-6
    near = NodeState(Mode.SLEEP_SENSOR_ONLY, 2.3, node_cfg.sleep_duration_s - eps)
    nxt = step_state_machine(node_cfg, near)
    assert nxt.mode is Mode.TX_ACTIVE
    assert nxt.clock_s == pytest.approx(node_cfg.sleep_duration_s)


def test_state_machine_dead_paths(node_cfg):
    absorbing = step_state_machine(node_cfg, NodeState(Mode.DEAD, 2.25, 7.5))
    assert absorbing.mode is Mode.DEAD
    recovered = step_state_machine(node_cfg, NodeState(Mode.DEAD, 2.31, 7.5))
    assert recovered.mode is Mode.SLEEP_SENSOR_ONLY
    assert recovered.clock_s == 0.0  # fresh cycle, sensor re-init restarted
    browned_out = step_state_machine(node_cfg, NodeState(Mode.SLEEP_SENSOR_ONLY, 2.1, 0.4))
    assert browned_out.mode is Mode.DEAD


def test_charge_trace_round_trip(node_cfg, model):
    for p_dbm in (-4.0, 0.0):
        p_in = 10 ** (p_dbm / 10.0) * 1e-3
        trace = sleep_charge_trace(model, p_in, 50e-3, 2.3, node_cfg.sleep_power_w)
        assert recover_efficiency(trace) == pytest.approx(
            efficiency(model, p_in), rel=1e-3
        )


def test_charge_trace_energy_balance(node_cfg, model):
    p_in = 5e-4
    trace = sleep_charge_trace(model, p_in, 50e-3, 2.3, node_cfg.sleep_power_w)
    analytic = math.sqrt(
        2.3**2 + 2 * 20.0 * (dc_output(model, p_in) - node_cfg.sleep_power_w) / 50e-3
    )
    assert trace.v_end_v == pytest.approx(analytic, rel=1e-12)


def test_charge_trace_full_discharge_rejected(model):
    # Input below the dead zone with a tiny capacitor drains to nothing.
    with pytest.raises(ValueError):
        sleep_charge_trace(model, 1e-4, 1e-5, 0.05, 4.23e-6, duration_s=20.0)
