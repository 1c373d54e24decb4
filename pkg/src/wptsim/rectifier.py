"""Nonlinear RF-to-DC conversion model and its consistency checks.

Two model forms are supported: a two-parameter threshold-diode curve
eta_max * (1 - P_th/P) clipped at zero, and a tabulated curve given as
(input power, efficiency) anchors whose DC *output* is interpolated
linearly (interpolating the output rather than the efficiency keeps the
output monotone by construction).

The default calibration pins the threshold so that a 400 uW input yields
exactly 142 uW of DC, the measured operating point of the reference node;
the 0.55 peak efficiency is a representative rectifier value and can be
overridden.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

DEFAULT_PEAK_EFFICIENCY = 0.55
DEFAULT_ANCHOR_INPUT_W = 400e-6
DEFAULT_ANCHOR_OUTPUT_W = 142e-6

# Convexity of the DC output is only claimed below this input power.
CONVEX_REGION_MAX_W = 1e-3

PARAMETRIC = "parametric"
TABULATED = "tabulated"


@dataclass(frozen=True)
class RectifierModel:
    """RF/DC conversion curve, parametric or tabulated."""

    form: str
    peak_efficiency: float | None = None
    threshold_power_w: float | None = None
    table: tuple[tuple[float, float], ...] | None = None  # (P_in_w, efficiency)

    def __post_init__(self) -> None:
        if self.form == PARAMETRIC:
            if self.peak_efficiency is None or self.threshold_power_w is None:
                raise ValueError("parametric form needs peak_efficiency and threshold_power_w")
            if not 0 < self.peak_efficiency <= 1:
                raise ValueError(f"peak_efficiency must be in (0, 1], got {self.peak_efficiency}")
            if self.threshold_power_w <= 0:
                raise ValueError("threshold_power_w must be > 0")
        elif self.form == TABULATED:
            if not self.table or len(self.table) < 2:
                raise ValueError("tabulated form needs at least two (P_in, efficiency) points")
            powers = [p for p, _ in self.table]
            effs = [g for _, g in self.table]
            if any(p <= 0 for p in powers):
                raise ValueError("table input powers must be > 0")
            if any(b <= a for a, b in zip(powers, powers[1:])):
                raise ValueError("table input powers must be strictly increasing")
            if any(not 0 <= g <= 1 for g in effs):
                raise ValueError("table efficiencies must be in [0, 1]")
            outputs = [p * g for p, g in self.table]
            if any(b < a for a, b in zip(outputs, outputs[1:])):
                raise ValueError("table DC output must be nondecreasing in input power")
        else:
            raise ValueError(f"unknown rectifier form {self.form!r}")

    @classmethod
    def parametric(cls, peak_efficiency: float, threshold_power_w: float) -> "RectifierModel":
        return cls(PARAMETRIC, peak_efficiency=peak_efficiency, threshold_power_w=threshold_power_w)

    @classmethod
    def tabulated(cls, points) -> "RectifierModel":
        return cls(TABULATED, table=tuple((float(p), float(g)) for p, g in points))

    @classmethod
    def calibrated(
        cls,
        peak_efficiency: float = DEFAULT_PEAK_EFFICIENCY,
        anchor_input_w: float = DEFAULT_ANCHOR_INPUT_W,
        anchor_output_w: float = DEFAULT_ANCHOR_OUTPUT_W,
    ) -> "RectifierModel":
        """Parametric model with the threshold solved from one DC anchor.

        In the linear region the output is eta*(P - P_th), so
        P_th = P_anchor - DC_anchor/eta.
        """
        threshold = anchor_input_w - anchor_output_w / peak_efficiency
        if threshold <= 0:
            raise ValueError(
                "anchor is unreachable: peak efficiency too low for the requested output"
            )
        return cls.parametric(peak_efficiency, threshold)


def default_model() -> RectifierModel:
    """The calibrated threshold-diode model (0.55 peak, 400 uW -> 142 uW)."""
    return RectifierModel.calibrated()


@dataclass(frozen=True)
class EfficiencyTrace:
    """One capacitor charging record from the efficiency measurement setup."""

    capacitance_f: float
    duration_s: float
    v_start_v: float
    v_end_v: float
    sleep_power_w: float
    input_power_w: float

    def __post_init__(self) -> None:
        if self.capacitance_f <= 0:
            raise ValueError("capacitance_f must be > 0")
        if self.duration_s <= 0:
            raise ValueError("duration_s must be > 0")
        if self.v_start_v < 0 or self.v_end_v < 0:
            raise ValueError("voltages must be >= 0")
        if self.input_power_w <= 0:
            raise ValueError("input_power_w must be > 0")


def dc_output(model: RectifierModel, p_in_w):
    """DC output power for RF input ``p_in_w`` (scalar or ndarray).

    Parametric: eta * max(0, P - P_th). Tabulated: linear interpolation of
    the anchor outputs, with an implicit (0, 0) anchor below the table and
    the last anchor's efficiency held constant above it.
    """
    p = np.asarray(p_in_w, dtype=float)
    if np.any(p <= 0):
        raise ValueError("input power must be > 0")
    if model.form == PARAMETRIC:
        out = model.peak_efficiency * np.maximum(p - model.threshold_power_w, 0.0)
    else:
        powers = np.array([pt for pt, _ in model.table])
        outputs = np.array([pt * g for pt, g in model.table])
        out = np.interp(p, np.concatenate(([0.0], powers)), np.concatenate(([0.0], outputs)))
        top_eff = model.table[-1][1]
        out = np.where(p > powers[-1], p * top_eff, out)
    return float(out) if out.ndim == 0 else out


def efficiency(model: RectifierModel, p_in_w):
    """Conversion efficiency Gamma(P) = dc_output(P) / P."""
    p = np.asarray(p_in_w, dtype=float)
    if np.any(p <= 0):
        raise ValueError("input power must be > 0")
    out = dc_output(model, p) / p
    return float(out) if np.ndim(out) == 0 else out


def recover_efficiency(trace: EfficiencyTrace) -> float:
    """Back out the conversion efficiency from a charging trace.

    The energy stored plus the sleep drain must have come through the
    rectifier: Gamma = ((C/2T)*(V_end^2 - V_start^2) + P_sleep) / P_in.
    A result outside [0, 1.05] cannot come from a physical rectifier and
    is rejected as an inconsistent trace.
    """
    stored_rate = (
        trace.capacitance_f
        / (2.0 * trace.duration_s)
        * (trace.v_end_v**2 - trace.v_start_v**2)
    )
    gamma = (stored_rate + trace.sleep_power_w) / trace.input_power_w
    if not 0.0 <= gamma <= 1.05:
        raise ValueError(
            f"inconsistent trace: recovered efficiency {gamma:.4g} outside [0, 1.05]"
        )
    return gamma


class ConvexityResult(NamedTuple):
    ok: bool
    max_violation_w: float
    at_power_w: float | None


def check_convex_output(
    model: RectifierModel,
    p_lo_w: float,
    p_hi_w: float,
    samples: int = 1001,
    tolerance_w: float = 1e-12,
) -> ConvexityResult:
    """Check that the DC output is convex on [p_lo_w, p_hi_w].

    Evaluates second differences of the output on a uniform grid; all must
    be >= -tolerance_w. Returns the worst violation and where it occurs.
    """
    if not 0 < p_lo_w < p_hi_w:
        raise ValueError("need 0 < p_lo_w < p_hi_w")
    if samples < 3:
        raise ValueError("samples must be >= 3")
    grid = np.linspace(p_lo_w, p_hi_w, samples)
    out = dc_output(model, grid)
    second = out[2:] - 2.0 * out[1:-1] + out[:-2]
    worst = int(np.argmin(second))
    violation = max(0.0, -float(second[worst]))
    ok = bool(second[worst] >= -tolerance_w)
    return ConvexityResult(ok, violation, None if ok else float(grid[worst + 1]))


def convex_region_w(model: RectifierModel) -> tuple[float, float]:
    """Default region on which convexity of the output is claimed."""
    if model.form == PARAMETRIC:
        return (model.threshold_power_w, CONVEX_REGION_MAX_W)
    return (model.table[0][0], min(CONVEX_REGION_MAX_W, model.table[-1][0]))
