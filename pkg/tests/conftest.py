"""Shared builders for the reference two-transmitter deployment."""

import pytest

from wptsim import (
    Geometry,
    LinkBudget,
    NODE_PRESETS,
    Scenario,
    Scheme,
    Transmitter,
    default_model,
)

F1_HZ = 916.8e6
TX_GAIN = 10.0 ** 0.6  # 6 dBi
RX_GAIN = 10.0 ** 0.215  # 2.15 dBi
LINE_M = 6.0
GRID_M = 0.03  # experimental interval, about a tenth of a wavelength
DELTA_F_HZ = 1e3


def make_tx(position_m, delta_f_hz=0.0, phase_rad=0.0, power_w=1.0):
    return Transmitter(position_m, power_w, TX_GAIN, F1_HZ + delta_f_hz, phase_rad)


def make_pair(delta_f_hz=0.0, phase1_rad=0.0, length_m=LINE_M):
    return (make_tx(0.0, 0.0, phase1_rad), make_tx(length_m, delta_f_hz))


def make_budget():
    return LinkBudget.for_transmitter(make_tx(0.0), RX_GAIN)


def make_scenario(
    scheme,
    delta_f_hz=None,
    grid_m=GRID_M,
    guard_m=0.0,
    delta_theta_rad=0.0,
    required_power_w=None,
    node=None,
    rectifier=None,
):
    if delta_f_hz is None:
        delta_f_hz = DELTA_F_HZ if scheme is Scheme.MPCSD else 0.0
    return Scenario(
        geometry=Geometry(LINE_M, grid_m, guard_m),
        budget=make_budget(),
        txs=(make_tx(0.0), make_tx(LINE_M)),
        scheme=scheme,
        delta_f_hz=delta_f_hz,
        delta_theta_rad=delta_theta_rad,
        rectifier=rectifier if rectifier is not None else default_model(),
        node=node if node is not None else NODE_PRESETS["case0"],
        required_power_w=required_power_w,
    )


@pytest.fixture
def budget():
    return make_budget()


@pytest.fixture
def model():
    return default_model()


@pytest.fixture
def node_cfg():
    return NODE_PRESETS["case0"]
