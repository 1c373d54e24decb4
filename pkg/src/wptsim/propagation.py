"""Free-space field model for one or more energy transmitters on a line.

Covers the complex channel gain to a receiver position, the received
power of a single transmitter, the instantaneous power of several
superposed carriers (possibly offset in frequency), the time-independent
two-transmitter interference pattern, and the capacitor-averaged mean
power when the carriers are frequency-offset.

All quantities are linear (watts, ratios); dB conversions live in the
harness. Every type here is immutable and every operation is pure, so
evaluation over position grids can be parallelized freely.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT_M_S = 299_792_458.0

# Trapezoidal averaging needs this many samples per beat period at minimum.
_MIN_SAMPLES_PER_PERIOD = 100


class SingularDistanceError(ValueError):
    """Field evaluated exactly at a transmitter position (distance = 0)."""


class AveragingBiasWarning(UserWarning):
    """Averaging window is not an integer number of beat periods."""


@dataclass(frozen=True)
class Transmitter:
    """One energy source: position on the line, power, gain, carrier."""

    position_m: float
    tx_power_w: float
    antenna_gain: float  # linear ratio, not dBi
    carrier_frequency_hz: float
    initial_phase_rad: float = 0.0

    def __post_init__(self) -> None:
        if self.tx_power_w <= 0:
            raise ValueError(f"tx_power_w must be > 0, got {self.tx_power_w}")
        if self.antenna_gain <= 0:
            raise ValueError(f"antenna_gain must be > 0, got {self.antenna_gain}")
        if self.carrier_frequency_hz <= 0:
            raise ValueError(
                f"carrier_frequency_hz must be > 0, got {self.carrier_frequency_hz}"
            )

    @property
    def eirp_w(self) -> float:
        return self.tx_power_w * self.antenna_gain


@dataclass(frozen=True)
class LinkBudget:
    """Receive-side link parameters shared by all transmitters.

    ``equivalent_tx_power_w`` is the reference P_t * G_t * G_r of the
    transmitter the budget was built from; per-transmitter values are
    obtained with :meth:`equivalent_power_w`. A single wavelength is used
    for all carriers: kilohertz offsets change it by parts in 1e6, far
    below anything resolvable here.
    """

    equivalent_tx_power_w: float
    rx_gain: float  # linear ratio
    wavelength_m: float

    def __post_init__(self) -> None:
        if self.equivalent_tx_power_w <= 0:
            raise ValueError("equivalent_tx_power_w must be > 0")
        if self.rx_gain <= 0:
            raise ValueError("rx_gain must be > 0")
        if self.wavelength_m <= 0:
            raise ValueError("wavelength_m must be > 0")

    @classmethod
    def for_transmitter(cls, tx: Transmitter, rx_gain: float) -> "LinkBudget":
        """Budget with wavelength taken from the transmitter's carrier."""
        wavelength = SPEED_OF_LIGHT_M_S / tx.carrier_frequency_hz
        return cls(tx.tx_power_w * tx.antenna_gain * rx_gain, rx_gain, wavelength)

    def equivalent_power_w(self, tx: Transmitter) -> float:
        """P_t * G_t * G_r for a specific transmitter."""
        return tx.tx_power_w * tx.antenna_gain * self.rx_gain


@dataclass(frozen=True)
class Geometry:
    """Sampling of the line between the outermost transmitters.

    Sample positions run from ``guard_band_m`` to ``line_length_m -
    guard_band_m`` inclusive, at ``sample_interval_m`` spacing. A zero
    guard band includes the transmitter positions themselves; field
    evaluations there are singular and are handled by the coverage layer.
    """

    line_length_m: float
    sample_interval_m: float
    guard_band_m: float = 0.0

    def __post_init__(self) -> None:
        if self.line_length_m <= 0:
            raise ValueError("line_length_m must be > 0")
        if not 0 < self.sample_interval_m < self.line_length_m:
            raise ValueError(
                "sample_interval_m must lie in (0, line_length_m), got "
                f"{self.sample_interval_m}"
            )
        if self.guard_band_m < 0:
            raise ValueError("guard_band_m must be >= 0")
        if 2 * self.guard_band_m >= self.line_length_m:
            raise ValueError("guard bands leave no samplable span")

    def positions(self) -> list[float]:
        """Grid positions, low to high. Count = floor(span/interval) + 1."""
        span = self.line_length_m - 2 * self.guard_band_m
        # Nudge avoids dropping the last point when span/interval is integral.
        count = int(math.floor(span / self.sample_interval_m + 1e-9)) + 1
        return [self.guard_band_m + k * self.sample_interval_m for k in range(count)]


@dataclass(frozen=True)
class ComplexGain:
    """Amplitude/phase of the free-space channel at one distance."""

    amplitude: float
    phase_rad: float  # normalized to [0, 2*pi)

    @property
    def value(self) -> complex:
        return self.amplitude * complex(math.cos(self.phase_rad), math.sin(self.phase_rad))


def channel_gain(tx: Transmitter, position_m: float, budget: LinkBudget) -> ComplexGain:
    """Free-space complex gain from ``tx`` to ``position_m``.

    Amplitude is wavelength/(4*pi*d), phase is the propagation delay
    -2*pi*d/wavelength reduced into [0, 2*pi).
    """
    distance = abs(position_m - tx.position_m)
    if distance == 0.0:
        raise SingularDistanceError(
            f"field is singular at the transmitter position {tx.position_m} m"
        )
    lam = budget.wavelength_m
    amplitude = lam / (4.0 * math.pi * distance)
    phase = (-2.0 * math.pi * distance / lam) % (2.0 * math.pi)
    return ComplexGain(amplitude, phase)


def received_power_single(tx: Transmitter, position_m: float, budget: LinkBudget) -> float:
    """Received power of one transmitter alone: P_e * (wavelength/(4*pi*d))^2."""
    distance = abs(position_m - tx.position_m)
    if distance == 0.0:
        raise SingularDistanceError(
            f"field is singular at the transmitter position {tx.position_m} m"
        )
    ratio = budget.wavelength_m / (4.0 * math.pi * distance)
    return budget.equivalent_power_w(tx) * ratio * ratio


def instantaneous_power(
    txs: list[Transmitter] | tuple[Transmitter, ...],
    position_m: float,
    t_s,
    budget: LinkBudget,
):
    """Instantaneous received power of the full superposition at time ``t_s``.

    Accepts a scalar time or an ndarray of times and returns the matching
    shape. The common carrier factor exp(j*2*pi*f_ref*t) has unit modulus
    and is dropped: only the offsets between carriers enter, which keeps
    the phase arguments small and the beat structure exact over long spans.
    """
    if not txs:
        raise ValueError("instantaneous_power needs at least one transmitter")
    t = np.asarray(t_s, dtype=float)
    f_ref = txs[0].carrier_frequency_hz
    total = np.zeros(t.shape, dtype=complex)
    for tx in txs:
        gain = channel_gain(tx, position_m, budget)
        amp = math.sqrt(budget.equivalent_power_w(tx)) * gain.amplitude
        phase = (
            2.0 * math.pi * (tx.carrier_frequency_hz - f_ref) * t
            + tx.initial_phase_rad
            + gain.phase_rad
        )
        total = total + amp * np.exp(1j * phase)
    power = np.abs(total) ** 2
    return float(power) if power.ndim == 0 else power


def received_power_mp(
    txs: list[Transmitter] | tuple[Transmitter, ...],
    position_m: float,
    budget: LinkBudget,
    delta_theta_rad: float | None = None,
) -> float:
    """Two same-frequency transmitters: closed-form interference power.

    Returns P1 + P2 + 2*sqrt(P1*P2)*cos(dtheta + 2*pi*(d2 - d1)/wavelength),
    where P1/P2 are the single-transmitter powers. ``delta_theta_rad``
    overrides the phase difference theta1 - theta2 taken from the
    transmitters when given. Frequency-offset transmitters are rejected;
    use :func:`instantaneous_power` or :func:`time_averaged_power` there.
    """
    if len(txs) != 2:
        raise ValueError(f"received_power_mp expects exactly 2 transmitters, got {len(txs)}")
    tx1, tx2 = txs
    if tx1.carrier_frequency_hz != tx2.carrier_frequency_hz:
        raise ValueError(
            "transmitters are frequency-offset; the interference pattern is "
            "time-dependent (use instantaneous_power or time_averaged_power)"
        )
    if delta_theta_rad is None:
        delta_theta_rad = tx1.initial_phase_rad - tx2.initial_phase_rad
    p1 = received_power_single(tx1, position_m, budget)
    p2 = received_power_single(tx2, position_m, budget)
    d1 = abs(position_m - tx1.position_m)
    d2 = abs(position_m - tx2.position_m)
    cross = 2.0 * math.sqrt(p1 * p2) * math.cos(
        delta_theta_rad + 2.0 * math.pi * (d2 - d1) / budget.wavelength_m
    )
    return p1 + p2 + cross


def mean_power_mpcsd(
    txs: list[Transmitter] | tuple[Transmitter, ...],
    position_m: float,
    budget: LinkBudget,
) -> float:
    """Mean received power with frequency-offset carriers.

    Averaging over the beat period cancels every cross term, leaving the
    plain sum of the single-transmitter powers. Requires pairwise distinct
    carrier frequencies; initial phases do not enter at all.
    """
    if not txs:
        raise ValueError("mean_power_mpcsd needs at least one transmitter")
    freqs = [tx.carrier_frequency_hz for tx in txs]
    if len(set(freqs)) != len(freqs):
        raise ValueError(
            "duplicate carrier frequencies: cross terms would not average out"
        )
    return sum(received_power_single(tx, position_m, budget) for tx in txs)


def beat_period_s(txs: list[Transmitter] | tuple[Transmitter, ...]) -> float | None:
    """Period of the power fluctuation, or None when it is constant.

    For uniformly spaced carrier offsets this is 1/min_offset, which is
    the fundamental of all pairwise beats.
    """
    freqs = sorted({tx.carrier_frequency_hz for tx in txs})
    if len(freqs) < 2:
        return None
    min_offset = min(b - a for a, b in zip(freqs, freqs[1:]))
    return 1.0 / min_offset


def time_averaged_power(
    txs: list[Transmitter] | tuple[Transmitter, ...],
    position_m: float,
    duration_s: float,
    step_s: float,
    budget: LinkBudget,
) -> float:
    """Trapezoidal time average of :func:`instantaneous_power`.

    This is the numeric oracle for :func:`mean_power_mpcsd`: over an
    integer number of beat periods the two agree to rounding error. A
    window that is not an integer number of periods biases the average and
    raises :class:`AveragingBiasWarning` instead of failing.
    """
    if not txs:
        raise ValueError("time_averaged_power needs at least one transmitter")
    if duration_s <= 0 or step_s <= 0:
        raise ValueError("duration_s and step_s must be > 0")
    period = beat_period_s(txs)
    if period is None:
        # Constant integrand: reduce to the closed forms exactly.
        if len(txs) == 1:
            return received_power_single(txs[0], position_m, budget)
        if len(txs) == 2:
            return received_power_mp(txs, position_m, budget)
        return instantaneous_power(txs, position_m, 0.0, budget)
    if step_s > period / _MIN_SAMPLES_PER_PERIOD:
        raise ValueError(
            f"step_s {step_s} too coarse: need <= beat period / "
            f"{_MIN_SAMPLES_PER_PERIOD} = {period / _MIN_SAMPLES_PER_PERIOD}"
        )
    cycles = duration_s / period
    if abs(cycles - round(cycles)) > 1e-9 * max(1.0, cycles):
        warnings.warn(
            f"averaging window of {cycles:g} beat periods is not an integer "
            "count; the mean may be biased",
            AveragingBiasWarning,
            stacklevel=2,
        )
    n = max(1, round(duration_s / step_s))
    times = np.arange(n + 1) * (duration_s / n)
    values = instantaneous_power(txs, position_m, times, budget)
    return float((0.5 * values[0] + values[1:-1].sum() + 0.5 * values[-1]) / n)
