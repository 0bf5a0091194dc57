"""Free-decay system identification.

A released finger rings down as an underdamped second-order system.  From
the decay envelope alone this module extracts, in order:

    delta   logarithmic decrement between the first and last usable peak
    zeta    damping ratio, delta / sqrt(4 pi^2 + delta^2)
    omega_d damped frequency from the mean inter-peak interval
    omega_n natural frequency, omega_d / sqrt(1 - zeta^2)
    k, b    joint stiffness A * omega_n^2 and damping 2 * zeta * omega_n * A

given the rotational inertia A from the rigid-link model.  The chain is
deliberately closed form: no iterative fitting, no initial guesses.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import signal as _sps

from .errors import (
    DegenerateFitError,
    InsufficientPeaksError,
    NonDecayingError,
    NotUnderdampedError,
    ParameterError,
    ValidationError,
)

__all__ = [
    "TraceUnit",
    "Trace",
    "PeakSet",
    "LdmEstimate",
    "LdmAggregate",
    "CalibrationFit",
    "butterworth_sos",
    "butterworth_lowpass",
    "detect_peaks",
    "log_decrement",
    "coefficients_from_ldm",
    "estimate_from_trace",
    "aggregate_trials",
    "calibrate_linear",
    "convert_angle",
]


class TraceUnit(enum.Enum):
    """Physical unit tag carried by a trace; the value is the CSV token."""

    ANGLE_RAD = "angle_rad"
    ANGLE_DEG = "angle_deg"
    VOLTAGE_MV = "voltage_mV"
    PRESSURE_PA = "pressure_Pa"
    FORCE_N = "force_N"


@dataclass(frozen=True)
class Trace:
    """Uniformly sampled scalar signal."""

    sample_rate_hz: float
    values: np.ndarray
    unit: TraceUnit

    def __post_init__(self):
        rate = float(self.sample_rate_hz)
        if not (math.isfinite(rate) and rate > 0):
            raise ValidationError("sample_rate_hz", f"must be > 0, got {rate!r}")
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValidationError("values", "must be one-dimensional")
        if values.size < 2:
            raise ValidationError("values", "need at least 2 samples")
        if not np.all(np.isfinite(values)):
            raise ValidationError("values", "all samples must be finite")
        if not isinstance(self.unit, TraceUnit):
            raise ValidationError("unit", f"unknown unit {self.unit!r}")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "sample_rate_hz", rate)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    @property
    def duration_s(self) -> float:
        return (self.values.size - 1) / self.sample_rate_hz

    def times(self) -> np.ndarray:
        return np.arange(self.values.size) / self.sample_rate_hz


@dataclass(frozen=True)
class PeakSet:
    """Oscillation peaks of a decay trace.

    indices are sample positions, strictly increasing.  amplitudes are peak
    heights above the settling value and must all be positive.
    """

    indices: np.ndarray
    amplitudes: np.ndarray
    settle_value: float

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=int)
        amp = np.asarray(self.amplitudes, dtype=float)
        if idx.ndim != 1 or amp.shape != idx.shape:
            raise ValidationError("indices", "indices/amplitudes must be "
                                  "matching one-dimensional arrays")
        if idx.size and np.any(np.diff(idx) <= 0):
            raise ValidationError("indices", "must be strictly increasing")
        if np.any(amp <= 0):
            raise ValidationError("amplitudes", "must all be positive")
        idx = idx.copy()
        amp = amp.copy()
        idx.setflags(write=False)
        amp.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "settle_value", float(self.settle_value))

    def __len__(self) -> int:
        return self.indices.size


@dataclass(frozen=True)
class LdmEstimate:
    """Result of the decrement chain, optionally completed with (k, b)."""

    delta: float
    zeta: float
    omega_d_rad_s: float
    omega_n_rad_s: float
    n_peaks_used: int
    stiffness_k: float | None = None   # N*m/rad, set by coefficients_from_ldm
    damping_b: float | None = None     # N*m*s/rad

    def __post_init__(self):
        if self.delta < 0:
            raise ValidationError("delta", "must be >= 0")
        if not (0.0 <= self.zeta < 1.0):
            raise ValidationError("zeta", "must be in [0, 1)")
        if not (0.0 < self.omega_d_rad_s <= self.omega_n_rad_s):
            raise ValidationError("omega_d_rad_s",
                                  "need 0 < omega_d <= omega_n")
        if self.n_peaks_used < 2:
            raise ValidationError("n_peaks_used", "must be >= 2")


@dataclass(frozen=True)
class LdmAggregate:
    """Mean and spread over repeated trials of one finger."""

    n_trials: int
    stiffness_k: float
    stiffness_k_sd: float
    damping_b: float
    damping_b_sd: float
    delta: float
    zeta: float
    omega_d_rad_s: float
    omega_n_rad_s: float
    mean_peaks_used: float


@dataclass(frozen=True)
class CalibrationFit:
    """Least-squares line mapping raw sensor values to a reference unit."""

    slope: float
    intercept: float
    r_squared: float


def butterworth_sos(cutoff_hz: float, sample_rate_hz: float,
                    order: int = 2) -> np.ndarray:
    """Design the low-pass used for raw decay traces, as second-order sections."""
    if order < 1:
        raise ParameterError(f"filter order must be >= 1, got {order}")
    nyquist = sample_rate_hz / 2.0
    if not (0.0 < cutoff_hz < nyquist):
        raise ParameterError(
            f"cutoff_hz must lie in (0, {nyquist}) for sample rate "
            f"{sample_rate_hz} Hz, got {cutoff_hz}")
    return _sps.butter(order, cutoff_hz, btype="low", fs=sample_rate_hz,
                       output="sos")


def butterworth_lowpass(trace: Trace, cutoff_hz: float,
                        order: int = 2) -> Trace:
    """Zero-phase Butterworth low-pass.

    The filter runs forward and backward, so it has no phase lag, its DC
    gain stays exactly 1, and peak locations of signals well inside the
    passband are preserved.
    """
    sos = butterworth_sos(cutoff_hz, trace.sample_rate_hz, order)
    filtered = _sps.sosfiltfilt(sos, trace.values)
    return Trace(trace.sample_rate_hz, filtered, trace.unit)


def detect_peaks(trace: Trace, min_prominence: float | None = None,
                 settle_window: int | None = None) -> PeakSet:
    """Locate decay peaks above the settling value.

    The settling value is the mean of the final settle_window samples
    (default: the last 10 % of the trace).  Peaks are local maxima with
    prominence at least min_prominence; when None, the threshold is 2 % of
    the first peak's amplitude above settle.  Only peaks above the settling
    value count, matching a decay that rings on one side of rest.

    Raises InsufficientPeaksError when fewer than two peaks survive.
    """
    values = trace.values
    if settle_window is None:
        settle_window = max(1, int(round(0.1 * values.size)))
    if not (1 <= settle_window <= values.size):
        raise ParameterError(
            f"settle_window must be in [1, {values.size}], got {settle_window}")
    settle = float(np.mean(values[-settle_window:]))

    if min_prominence is None:
        candidates, _ = _sps.find_peaks(values)
        candidates = candidates[values[candidates] > settle]
        if candidates.size == 0:
            raise InsufficientPeaksError(0)
        min_prominence = 0.02 * (values[candidates[0]] - settle)
    if min_prominence <= 0:
        raise ParameterError(
            f"min_prominence must be > 0, got {min_prominence}")

    indices, _ = _sps.find_peaks(values, prominence=min_prominence)
    indices = indices[values[indices] > settle]
    if indices.size < 2:
        raise InsufficientPeaksError(int(indices.size))
    return PeakSet(indices=indices, amplitudes=values[indices] - settle,
                   settle_value=settle)


def log_decrement(peaks: PeakSet, sample_rate_hz: float) -> LdmEstimate:
    """Decrement, damping ratio, and frequencies from a peak train.

    Uses the first and last peak: delta = ln(x_first / x_last) / n over
    n = len(peaks) - 1 intervals, and omega_d = 2 pi / T with T the mean
    inter-peak spacing.  Identical first and last amplitudes give delta = 0
    (an undamped ring); a last peak above the first raises NonDecayingError.
    """
    if sample_rate_hz <= 0:
        raise ParameterError(f"sample_rate_hz must be > 0, got {sample_rate_hz}")
    if len(peaks) < 2:
        raise InsufficientPeaksError(len(peaks))
    x_first = float(peaks.amplitudes[0])
    x_last = float(peaks.amplitudes[-1])
    if x_last > x_first:
        raise NonDecayingError(
            f"last peak ({x_last:.6g}) exceeds first ({x_first:.6g}); "
            f"the trace does not decay")
    n = len(peaks) - 1
    delta = math.log(x_first / x_last) / n
    period_s = (int(peaks.indices[-1]) - int(peaks.indices[0])) \
        / (n * sample_rate_hz)
    omega_d = 2.0 * math.pi / period_s
    zeta = delta / math.sqrt(4.0 * math.pi ** 2 + delta ** 2)
    if not zeta < 1.0:
        raise NotUnderdampedError(
            f"damping ratio {zeta:.6g} is not below 1; the decrement chain "
            f"only applies to underdamped decays")
    omega_n = omega_d / math.sqrt(1.0 - zeta ** 2)
    return LdmEstimate(delta=delta, zeta=zeta, omega_d_rad_s=omega_d,
                       omega_n_rad_s=omega_n, n_peaks_used=len(peaks))


def coefficients_from_ldm(estimate: LdmEstimate,
                          inertia_A: float) -> LdmEstimate:
    """Complete an estimate with k = A * omega_n^2 and b = 2 zeta omega_n A."""
    if inertia_A <= 0:
        raise ParameterError(f"inertia_A must be > 0, got {inertia_A}")
    wn = estimate.omega_n_rad_s
    return replace(estimate,
                   stiffness_k=inertia_A * wn * wn,
                   damping_b=2.0 * estimate.zeta * wn * inertia_A)


def estimate_from_trace(trace: Trace, inertia_A: float, *,
                        cutoff_hz: float = 10.0, filter_order: int = 2,
                        min_prominence_frac: float = 0.10,
                        settle_window: int | None = None) -> LdmEstimate:
    """Full chain: low-pass, peak detection, decrement, coefficients.

    min_prominence_frac is the prominence floor as a fraction of the first
    peak amplitude.  The 0.10 default is deliberately stricter than the
    detect_peaks fallback: on noisy traces a looser floor lets spurious
    late-tail bumps into the peak train, which wrecks both delta and the
    period estimate.
    """
    if not (0.0 < min_prominence_frac < 1.0):
        raise ParameterError(
            f"min_prominence_frac must be in (0, 1), got {min_prominence_frac}")
    filtered = butterworth_lowpass(trace, cutoff_hz, filter_order)
    # first pass only to size the prominence floor
    coarse = detect_peaks(filtered, settle_window=settle_window)
    floor = min_prominence_frac * float(coarse.amplitudes[0])
    peaks = detect_peaks(filtered, min_prominence=floor,
                         settle_window=settle_window)
    estimate = log_decrement(peaks, filtered.sample_rate_hz)
    return coefficients_from_ldm(estimate, inertia_A)


def aggregate_trials(estimates: list[LdmEstimate]) -> LdmAggregate:
    """Mean and sample standard deviation over completed estimates.

    A single trial reports a standard deviation of 0.  Estimates must have
    been completed by coefficients_from_ldm first.
    """
    if not estimates:
        raise ParameterError("need at least one estimate to aggregate")
    if any(e.stiffness_k is None or e.damping_b is None for e in estimates):
        raise ParameterError("estimates must carry stiffness and damping; "
                             "run coefficients_from_ldm first")
    ks = np.array([e.stiffness_k for e in estimates])
    bs = np.array([e.damping_b for e in estimates])
    sd_k = float(np.std(ks, ddof=1)) if ks.size > 1 else 0.0
    sd_b = float(np.std(bs, ddof=1)) if bs.size > 1 else 0.0
    return LdmAggregate(
        n_trials=len(estimates),
        stiffness_k=float(np.mean(ks)),
        stiffness_k_sd=sd_k,
        damping_b=float(np.mean(bs)),
        damping_b_sd=sd_b,
        delta=float(np.mean([e.delta for e in estimates])),
        zeta=float(np.mean([e.zeta for e in estimates])),
        omega_d_rad_s=float(np.mean([e.omega_d_rad_s for e in estimates])),
        omega_n_rad_s=float(np.mean([e.omega_n_rad_s for e in estimates])),
        mean_peaks_used=float(np.mean([e.n_peaks_used for e in estimates])),
    )


def calibrate_linear(raw: Trace, reference: Trace) -> CalibrationFit:
    """Ordinary least squares line from raw samples to reference samples.

    Both traces must have the same length.  A raw trace with no spread has
    no defined slope and raises DegenerateFitError.  When the residuals
    vanish identically (including a constant reference) r_squared is 1 by
    convention.
    """
    x = raw.values
    y = reference.values
    if x.size != y.size:
        raise ParameterError(
            f"trace lengths differ: {x.size} raw vs {y.size} reference")
    x_mean = float(np.mean(x))
    y_mean = float(np.mean(y))
    s_xx = float(np.sum((x - x_mean) ** 2))
    # relative guard: a constant trace leaves only rounding residue in s_xx
    if s_xx <= 1e-24 * max(float(np.sum(x ** 2)), 1.0):
        raise DegenerateFitError(
            "raw trace is constant; slope is undefined")
    slope = float(np.sum((x - x_mean) * (y - y_mean))) / s_xx
    intercept = y_mean - slope * x_mean
    residuals = y - (slope * x + intercept)
    ss_res = float(np.sum(residuals ** 2))
    ss_tot = float(np.sum((y - y_mean) ** 2))
    # exact fits (and constant references) count as perfect
    scale = max(ss_tot, float(np.sum(y ** 2)), 1.0)
    if ss_res <= 1e-24 * scale:
        r_squared = 1.0
    else:
        r_squared = 1.0 - ss_res / ss_tot
    return CalibrationFit(slope=slope, intercept=intercept,
                          r_squared=r_squared)


def convert_angle(trace: Trace, unit: TraceUnit) -> Trace:
    """Convert between the two angle units; other conversions are refused."""
    pair = (trace.unit, unit)
    if trace.unit == unit:
        return trace
    if pair == (TraceUnit.ANGLE_DEG, TraceUnit.ANGLE_RAD):
        return Trace(trace.sample_rate_hz, np.radians(trace.values), unit)
    if pair == (TraceUnit.ANGLE_RAD, TraceUnit.ANGLE_DEG):
        return Trace(trace.sample_rate_hz, np.degrees(trace.values), unit)
    raise ParameterError(
        f"cannot convert {trace.unit.value} to {unit.value}")
