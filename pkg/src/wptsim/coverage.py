"""Activation predicate and coverage analysis over the deployment line.

A scenario binds the geometry, link budget, transmitters, scheme, the
rectifier curve and the node consumption profile. Coverage is the
fraction of grid positions whose scheme-average received power rectifies
to at least the node's average consumption. Positions that coincide with
a transmitter have unbounded free-space power and count as covered.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from . import node as node_mod
from . import propagation as prop
from . import rectifier as rect

_REQUIRED_POWER_TOL_W = 1e-9


class Scheme(str, enum.Enum):
    SP1 = "sp1"
    SP2 = "sp2"
    MP = "mp"
    MPCSD = "mpcsd"


@dataclass(frozen=True)
class SweepSpec:
    """Log-spaced required-power sweep range."""

    start_dbm: float
    stop_dbm: float
    points: int

    def __post_init__(self) -> None:
        if self.points < 1:
            raise ValueError("points must be >= 1")
        if self.stop_dbm < self.start_dbm:
            raise ValueError("stop_dbm must be >= start_dbm")

    def values_w(self) -> list[float]:
        dbm = np.linspace(self.start_dbm, self.stop_dbm, self.points)
        return [10.0 ** (x / 10.0) * 1e-3 for x in dbm]


@dataclass(frozen=True)
class Scenario:
    """Everything needed to evaluate one deployment."""

    geometry: prop.Geometry
    budget: prop.LinkBudget
    txs: tuple[prop.Transmitter, ...]
    scheme: Scheme
    delta_f_hz: float
    delta_theta_rad: float
    rectifier: rect.RectifierModel
    node: node_mod.NodeConfig
    required_power_w: float | None = None
    sweep: SweepSpec | None = None

    def __post_init__(self) -> None:
        if not self.txs:
            raise ValueError("scenario needs at least one transmitter")
        needed = 2 if self.scheme in (Scheme.SP2, Scheme.MP, Scheme.MPCSD) else 1
        if len(self.txs) < needed:
            raise ValueError(f"scheme {self.scheme.value} needs >= {needed} transmitters")
        if self.scheme is Scheme.MP and self.delta_f_hz != 0.0:
            raise ValueError("scheme mp requires delta_f_hz = 0")
        if self.scheme is Scheme.MPCSD and self.delta_f_hz <= 0.0:
            raise ValueError("scheme mpcsd requires delta_f_hz > 0")
        for tx in self.txs:
            if not 0.0 <= tx.position_m <= self.geometry.line_length_m:
                raise ValueError(
                    f"transmitter position {tx.position_m} m outside "
                    f"[0, {self.geometry.line_length_m}] m"
                )
        if self.required_power_w is not None and self.required_power_w <= 0:
            raise ValueError("required_power_w must be > 0")

    def effective_transmitters(
        self, delta_theta_rad: float | None = None
    ) -> tuple[prop.Transmitter, ...]:
        """Transmitters as actually driven by the scheme.

        SP1/SP2 select one transmitter. MP drives all at the common
        carrier; MPCSD offsets transmitter k by k*delta_f. The phase
        difference (first transmitter minus the rest) is delta_theta.
        """
        dth = self.delta_theta_rad if delta_theta_rad is None else delta_theta_rad
        if self.scheme is Scheme.SP1:
            return (self.txs[0],)
        if self.scheme is Scheme.SP2:
            return (self.txs[1],)
        out = []
        for k, tx in enumerate(self.txs):
            out.append(
                replace(
                    tx,
                    carrier_frequency_hz=tx.carrier_frequency_hz
                    + (k * self.delta_f_hz if self.scheme is Scheme.MPCSD else 0.0),
                    initial_phase_rad=dth if k == 0 else 0.0,
                )
            )
        return tuple(out)

    def p_csp_w(self) -> float:
        return node_mod.average_consumed_power(self.node)

    def field_power_w(self, position_m: float, delta_theta_rad: float | None = None) -> float:
        """Scheme-average received power at one position; inf at a transmitter."""
        txs = self.effective_transmitters(delta_theta_rad)
        try:
            if self.scheme in (Scheme.SP1, Scheme.SP2):
                return prop.received_power_single(txs[0], position_m, self.budget)
            if self.scheme is Scheme.MP:
                return prop.received_power_mp(txs, position_m, self.budget)
            return prop.mean_power_mpcsd(txs, position_m, self.budget)
        except prop.SingularDistanceError:
            return math.inf

    def resolved_required_power_w(self) -> float:
        """Configured required power, or the rectifier fixed point."""
        if self.required_power_w is not None:
            return self.required_power_w
        return required_power(self.rectifier, self.p_csp_w())


@dataclass(frozen=True)
class CoverageReport:
    """Per-position field, activation flags, and the covered fraction."""

    scheme: Scheme
    positions_m: tuple[float, ...]
    avg_power_w: tuple[float, ...]
    active: tuple[bool, ...]
    coverage: float
    p_csp_w: float
    # The capacitor averages power before rectification, so for the
    # frequency-offset scheme the analytic activation is a lower bound;
    # a time-domain node simulation can confirm it when needed.
    activation_is_lower_bound: bool


def activation(avg_power_w: float, model: rect.RectifierModel, p_csp_w: float) -> bool:
    """True when the rectified average power sustains the node."""
    if avg_power_w < 0:
        raise ValueError("avg_power_w must be >= 0")
    if avg_power_w == 0.0:
        return False
    if math.isinf(avg_power_w):
        return True
    return rect.dc_output(model, avg_power_w) >= p_csp_w


def required_power(model: rect.RectifierModel, p_csp_w: float) -> float:
    """RF input whose DC output first reaches ``p_csp_w``.

    Bisection on the monotone DC output, to 1e-9 W. For a consumption of
    zero this lands on the dead-zone edge, the largest input that still
    produces nothing.
    """
    if p_csp_w < 0:
        raise ValueError("p_csp_w must be >= 0")
    lo = 1e-15
    if rect.dc_output(model, lo) > p_csp_w:
        return lo
    hi = 1e-3
    for _ in range(200):
        if rect.dc_output(model, hi) > p_csp_w:
            break
        hi *= 2.0
    else:
        raise ValueError(f"required DC output {p_csp_w} W is unreachable for this rectifier")
    while hi - lo > _REQUIRED_POWER_TOL_W:
        mid = 0.5 * (lo + hi)
        if rect.dc_output(model, mid) <= p_csp_w:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def compute_coverage(scenario: Scenario, delta_theta_rad: float | None = None) -> CoverageReport:
    """Evaluate the field on the geometry grid and threshold it."""
    positions = scenario.geometry.positions()
    powers = [scenario.field_power_w(pos, delta_theta_rad) for pos in positions]
    p_csp = scenario.p_csp_w()
    active = [activation(p, scenario.rectifier, p_csp) for p in powers]
    return CoverageReport(
        scheme=scenario.scheme,
        positions_m=tuple(positions),
        avg_power_w=tuple(powers),
        active=tuple(active),
        coverage=sum(active) / len(active),
        p_csp_w=p_csp,
        activation_is_lower_bound=scenario.scheme is Scheme.MPCSD,
    )


def coverage_curve(
    scenario: Scenario, p_req_values_w: list[float] | tuple[float, ...]
) -> list[tuple[float, float]]:
    """Coverage against a sweep of required powers, by direct thresholding.

    The same per-position field is reused for every threshold, so the
    result is nonincreasing by construction.
    """
    if not p_req_values_w:
        raise ValueError("p_req_values_w must be nonempty")
    if any(p <= 0 for p in p_req_values_w):
        raise ValueError("required powers must be > 0")
    if any(b < a for a, b in zip(p_req_values_w, p_req_values_w[1:])):
        raise ValueError("required powers must be sorted ascending")
    positions = scenario.geometry.positions()
    powers = [scenario.field_power_w(pos) for pos in positions]
    out = []
    for p_req in p_req_values_w:
        covered = sum(1 for p in powers if p >= p_req)
        out.append((p_req, covered / len(powers)))
    return out


def max_spacing(scheme: Scheme, budget: prop.LinkBudget, p_req_w: float) -> float:
    """Largest transmitter spacing that still covers the whole line.

    Single-point: (wavelength/4pi)*sqrt(P_e/P_req). The frequency-offset
    two-transmitter scheme reaches 2*sqrt(2) times farther because the
    worst point is the midpoint and both transmitters contribute there.
    """
    if p_req_w <= 0:
        raise ValueError("p_req_w must be > 0")
    base = (budget.wavelength_m / (4.0 * math.pi)) * math.sqrt(
        budget.equivalent_tx_power_w / p_req_w
    )
    if scheme in (Scheme.SP1, Scheme.SP2):
        return base
    if scheme is Scheme.MPCSD:
        return 2.0 * math.sqrt(2.0) * base
    raise ValueError("no closed-form spacing for the same-frequency scheme (deadspots)")


def coverage_phase_sensitivity(
    scenario: Scenario, delta_theta_values_rad: list[float] | tuple[float, ...]
) -> float:
    """Spread (max - min) of coverage over a sweep of phase differences.

    Only the same-frequency two-transmitter scheme depends on the phase;
    for the others the sweep degenerates and the spread is zero.
    """
    if not delta_theta_values_rad:
        raise ValueError("delta_theta_values_rad must be nonempty")
    coverages = [compute_coverage(scenario, dth).coverage for dth in delta_theta_values_rad]
    return max(coverages) - min(coverages)


def rectified_input(
    scenario: Scenario,
    position_m: float,
    instantaneous: bool = False,
    delta_theta_rad: float | None = None,
):
    """DC-input callable for the node simulation at one position.

    By default the capacitor-averaged field power is rectified once and
    fed as a constant. With ``instantaneous=True`` the rectifier tracks
    the beating waveform instead, which is the direct time-domain form of
    the activation condition.
    """
    model = scenario.rectifier
    if not instantaneous:
        avg = scenario.field_power_w(position_m, delta_theta_rad)
        if math.isinf(avg):
            raise ValueError("cannot drive the node exactly at a transmitter position")
        return node_mod.constant_input(rect.dc_output(model, avg))
    txs = scenario.effective_transmitters(delta_theta_rad)
    budget = scenario.budget

    def dc_input(t_s):
        p_rf = prop.instantaneous_power(txs, position_m, t_s, budget)
        # The waveform touches zero at destructive instants; clip into the
        # rectifier domain (output there is zero anyway).
        return rect.dc_output(model, np.maximum(p_rf, 1e-30))

    return dc_input
