"""Pressure controllers built on the rigid-link model.

Two loops share one PID core:

  * position: feedforward pressure k * theta_ref / N plus PID on the angle
    error.  Disabling the feedforward gives the bare-PID baseline used for
    comparison runs.
  * force: feedforward from the static force map plus PID on the error
    between the commanded force and the pressure-based force estimate.

The PID is positional form with a trapezoidal, clamped integral and a
first-order filtered derivative.  Controller state is an immutable value
threaded through the loop, so runs are trivially reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InstabilityError, ParameterError, ValidationError
from .model import (
    DynamicCoefficients,
    FingerGeometry,
    TipForce,
    estimate_force,
    pressure_for_angle,
    pressure_for_force,
    tip_normal,
)
from .sim import PlantConfig, contact_force, integrate
from .signal import Trace, TraceUnit

__all__ = [
    "PidGains",
    "PidState",
    "ReferenceSpec",
    "TrackingReport",
    "ForceTrackingReport",
    "TrackingRun",
    "ForceRun",
    "pid_step",
    "position_controller_step",
    "force_controller_step",
    "generate_reference",
    "evaluate_tracking",
    "run_position_tracking",
    "run_force_tracking",
]

DEFAULT_PRESSURE_LIMITS = (0.0, 200e3)  # Pa


@dataclass(frozen=True)
class PidGains:
    """PID gains plus loop constants.

    integral_limit clamps the integral state (error unit times seconds),
    which bounds windup during saturation.  derivative_filter_hz is the
    corner of the first-order filter on the derivative term.
    """

    kp: float
    ki: float
    kd: float
    integral_limit: float
    derivative_filter_hz: float = 40.0
    loop_rate_hz: float = 100.0

    def __post_init__(self):
        for name in ("kp", "ki", "kd", "integral_limit",
                     "derivative_filter_hz", "loop_rate_hz"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(name, "must be finite")
        if not (self.integral_limit > 0):
            raise ValidationError("integral_limit", "must be > 0")
        if not (self.derivative_filter_hz > 0):
            raise ValidationError("derivative_filter_hz", "must be > 0")
        if not (self.loop_rate_hz > 0):
            raise ValidationError("loop_rate_hz", "must be > 0")

    @property
    def dt_s(self) -> float:
        return 1.0 / self.loop_rate_hz


@dataclass(frozen=True)
class PidState:
    """Integral, previous error, and filtered derivative. Starts at rest."""

    integral: float = 0.0
    prev_error: float = 0.0
    derivative: float = 0.0


@dataclass(frozen=True)
class ReferenceSpec:
    """Reference trajectory description.

    kind is one of sine, step, hold.  A sine is
    offset + amplitude * sin(2 pi t / period_s); step jumps to
    offset + amplitude at t = 0; hold stays at offset.
    """

    kind: str
    offset_rad: float
    amplitude_rad: float = 0.0
    period_s: float = 0.0
    duration_s: float = 3.0

    def __post_init__(self):
        if self.kind not in ("sine", "step", "hold"):
            raise ValidationError("kind", f"unknown kind {self.kind!r}")
        if self.kind == "sine" and not (self.period_s > 0):
            raise ValidationError("period_s", "must be > 0 for a sine")
        if not (self.duration_s > 0):
            raise ValidationError("duration_s", "must be > 0")


@dataclass(frozen=True)
class TrackingReport:
    """Angle-tracking quality over the evaluated window."""

    rmse_rad: float
    max_error_rad: float
    error: Trace
    skip_samples: int

    def __post_init__(self):
        if self.max_error_rad < self.rmse_rad:
            raise ValidationError("max_error_rad", "cannot be below the rmse")


@dataclass(frozen=True)
class ForceTrackingReport:
    """Force-step quality: settling into a +-2 % band and steady error."""

    settled: bool
    settling_time_s: float | None
    steady_state_error_n: float
    saturation_limited: bool
    force_ceiling_n: float


@dataclass(frozen=True)
class TrackingRun:
    reference: Trace
    measured: Trace
    command: Trace
    pressure_applied: Trace
    report: TrackingReport


@dataclass(frozen=True)
class ForceRun:
    force_reference_n: float
    contact: Trace
    estimated: Trace
    theta: Trace
    command: Trace
    pressure_applied: Trace
    report: ForceTrackingReport


def pid_step(gains: PidGains, error: float, state: PidState,
             ) -> tuple[float, PidState]:
    """One PID update; returns (correction, new state).

    Trapezoidal integral with a hard clamp at +-integral_limit and a
    filtered derivative of the error.  Deterministic for a given error
    sequence and initial state.
    """
    dt = gains.dt_s
    integral = state.integral + 0.5 * (error + state.prev_error) * dt
    integral = min(max(integral, -gains.integral_limit), gains.integral_limit)
    alpha = dt / (dt + 1.0 / (2.0 * math.pi * gains.derivative_filter_hz))
    derivative = state.derivative + alpha * (
        (error - state.prev_error) / dt - state.derivative)
    out = gains.kp * error + gains.ki * integral + gains.kd * derivative
    return out, PidState(integral=integral, prev_error=error,
                         derivative=derivative)


def _clamp(value: float, limits: tuple[float, float]) -> float:
    return min(max(value, limits[0]), limits[1])


def position_controller_step(coefficients: DynamicCoefficients,
                             gains: PidGains, theta_ref_rad: float,
                             theta_meas_rad: float, state: PidState, *,
                             feedforward: bool = True,
                             limits: tuple[float, float] = DEFAULT_PRESSURE_LIMITS,
                             ) -> tuple[float, PidState]:
    """One position-loop tick: static-map feedforward plus PID correction.

    With feedforward=False this is the bare PID baseline; the gains are
    interpreted identically in both modes.
    """
    correction, state = pid_step(gains, theta_ref_rad - theta_meas_rad, state)
    command = correction
    if feedforward:
        command += pressure_for_angle(coefficients, theta_ref_rad)
    return _clamp(command, limits), state


def force_controller_step(coefficients: DynamicCoefficients,
                          geometry: FingerGeometry, gains: PidGains,
                          force_ref_n: float, p_applied_prev_pa: float,
                          theta_meas_rad: float, state: PidState, *,
                          contact_axis: np.ndarray | None = None,
                          limits: tuple[float, float] = DEFAULT_PRESSURE_LIMITS,
                          ) -> tuple[float, PidState]:
    """One force-loop tick against a contact.

    The measured force is the model estimate from the previous applied
    pressure (one loop tick of delay; no force sensor in the loop) projected
    on the contact axis, which defaults to the tip normal at the measured
    angle.  Feedforward comes from the static force map at the commanded
    force.
    """
    axis = tip_normal(theta_meas_rad) if contact_axis is None else contact_axis
    est = estimate_force(coefficients, geometry, p_applied_prev_pa,
                         theta_meas_rad)
    f_meas = float(est.as_array() @ axis)
    correction, state = pid_step(gains, force_ref_n - f_meas, state)
    target = TipForce(fx_N=force_ref_n * axis[0], fy_N=force_ref_n * axis[1])
    command = pressure_for_force(coefficients, geometry, theta_meas_rad,
                                 target) + correction
    return _clamp(command, limits), state


def generate_reference(spec: ReferenceSpec, sample_rate_hz: float) -> Trace:
    """Sample a reference spec at the loop rate, in radians."""
    if sample_rate_hz <= 0:
        raise ParameterError(f"sample_rate_hz must be > 0, got {sample_rate_hz}")
    n = int(round(spec.duration_s * sample_rate_hz))
    if n < 2:
        raise ParameterError("duration too short for the sample rate")
    t = np.arange(n) / sample_rate_hz
    if spec.kind == "sine":
        values = spec.offset_rad + spec.amplitude_rad * np.sin(
            2.0 * np.pi * t / spec.period_s)
    elif spec.kind == "step":
        values = np.full(n, spec.offset_rad + spec.amplitude_rad)
    else:
        values = np.full(n, spec.offset_rad)
    return Trace(sample_rate_hz, values, TraceUnit.ANGLE_RAD)


def evaluate_tracking(reference: Trace, measured: Trace,
                      skip_samples: int = 0) -> TrackingReport:
    """RMSE and worst error between reference and measurement.

    skip_samples drops the leading transient from the statistics; the error
    trace itself keeps every sample.
    """
    if len(reference) != len(measured):
        raise ParameterError(
            f"trace lengths differ: {len(reference)} vs {len(measured)}")
    if reference.unit is not measured.unit:
        raise ParameterError(
            f"unit mismatch: {reference.unit.value} vs {measured.unit.value}")
    if not (0 <= skip_samples < len(reference)):
        raise ParameterError(
            f"skip_samples must be in [0, {len(reference)}), got {skip_samples}")
    error = reference.values - measured.values
    window = error[skip_samples:]
    return TrackingReport(
        rmse_rad=float(np.sqrt(np.mean(window ** 2))),
        max_error_rad=float(np.max(np.abs(window))),
        error=Trace(reference.sample_rate_hz, error, reference.unit),
        skip_samples=skip_samples,
    )


def _loop_stride(plant: PlantConfig, loop_rate_hz: float) -> int:
    steps = 1.0 / (loop_rate_hz * plant.dt_s)
    stride = int(round(steps))
    if stride < 1 or abs(steps - stride) > 1e-9:
        raise ParameterError(
            f"loop rate {loop_rate_hz} Hz must divide the integration rate "
            f"{1.0 / plant.dt_s:.6g} Hz")
    return stride


def run_position_tracking(plant: PlantConfig,
                          coefficients: DynamicCoefficients,
                          gains: PidGains, spec: ReferenceSpec, *,
                          feedforward: bool = True, theta0_rad: float = 0.0,
                          noise_sd_rad: float = 0.0, seed: int | None = None,
                          abort_theta_rad: float = 10.0,
                          skip_samples: int | None = None) -> TrackingRun:
    """Closed-loop angle tracking of a reference on the simulated plant.

    coefficients are the controller's model of the plant, which the caller
    may perturb away from plant.coefficients to probe robustness.  The run
    aborts with InstabilityError once |theta| passes abort_theta_rad.  By
    default the report skips one reference period (or 10 % of a hold/step).
    """
    reference = generate_reference(spec, gains.loop_rate_hz)
    stride = _loop_stride(plant, gains.loop_rate_hz)
    n = len(reference)
    rng = np.random.default_rng(seed) if noise_sd_rad > 0 else None

    theta, omega, p_act = theta0_rad, 0.0, 0.0
    state = PidState()
    measured = np.empty(n)
    command = np.empty(n)
    applied = np.empty(n)
    for i in range(n):
        meas = theta
        if rng is not None:
            meas += rng.normal(0.0, noise_sd_rad)
        measured[i] = meas
        u, state = position_controller_step(
            coefficients, gains, float(reference.values[i]), meas, state,
            feedforward=feedforward, limits=plant.pressure_limits_pa)
        command[i] = u
        theta, omega, p_act, _ = integrate(
            plant, theta, omega, p_act, u, stride,
            t0_s=i * stride * plant.dt_s)
        applied[i] = p_act
        if abs(theta) > abort_theta_rad:
            raise InstabilityError(theta, (i + 1) / gains.loop_rate_hz)

    if skip_samples is None:
        if spec.kind == "sine":
            skip_samples = int(round(spec.period_s * gains.loop_rate_hz))
        else:
            skip_samples = int(round(0.1 * n))
        skip_samples = min(skip_samples, n - 1)
    rate = gains.loop_rate_hz
    measured_tr = Trace(rate, measured, TraceUnit.ANGLE_RAD)
    report = evaluate_tracking(reference, measured_tr, skip_samples)
    return TrackingRun(
        reference=reference,
        measured=measured_tr,
        command=Trace(rate, command, TraceUnit.PRESSURE_PA),
        pressure_applied=Trace(rate, applied, TraceUnit.PRESSURE_PA),
        report=report,
    )


def run_force_tracking(plant: PlantConfig,
                       coefficients: DynamicCoefficients,
                       gains: PidGains, force_ref_n: float,
                       stop_theta_rad: float, duration_s: float, *,
                       theta0_rad: float = 0.0,
                       settle_band: float = 0.02) -> ForceRun:
    """Drive the finger onto a rigid stop and regulate the contact force.

    The controller never sees the true contact force, only its own estimate
    from pressure and angle.  The report checks settling of the true
    (simulated) contact force into the +-settle_band around the command,
    and flags the run as saturation limited when the static force map needs
    more pressure than the actuator ceiling allows at the stop angle.
    """
    if force_ref_n <= 0:
        raise ParameterError(f"force_ref_n must be > 0, got {force_ref_n}")
    if stop_theta_rad <= theta0_rad:
        raise ParameterError("stop_theta_rad must exceed theta0_rad")
    stride = _loop_stride(plant, gains.loop_rate_hz)
    n = int(round(duration_s * gains.loop_rate_hz))
    if n < 2:
        raise ParameterError("duration too short for the loop rate")

    axis = tip_normal(stop_theta_rad)
    target = TipForce(fx_N=force_ref_n * axis[0], fy_N=force_ref_n * axis[1])
    p_needed = pressure_for_force(coefficients, plant.geometry,
                                  stop_theta_rad, target)
    lo, hi = plant.pressure_limits_pa
    saturation_limited = p_needed > hi
    ceiling = float(estimate_force(coefficients, plant.geometry, hi,
                                   stop_theta_rad).as_array() @ axis)

    theta, omega, p_act, pinned = theta0_rad, 0.0, 0.0, False
    state = PidState()
    th = np.empty(n)
    est = np.empty(n)
    fc = np.empty(n)
    command = np.empty(n)
    applied = np.empty(n)
    for i in range(n):
        th[i] = theta
        fc[i] = contact_force(plant, p_act, stop_theta_rad, pinned)
        est[i] = float(estimate_force(coefficients, plant.geometry, p_act,
                                      theta).as_array() @ tip_normal(theta))
        u, state = force_controller_step(
            coefficients, plant.geometry, gains, force_ref_n, p_act, theta,
            state, limits=plant.pressure_limits_pa)
        command[i] = u
        theta, omega, p_act, pinned = integrate(
            plant, theta, omega, p_act, u, stride,
            stop_theta_rad=stop_theta_rad, pinned=pinned,
            t0_s=i * stride * plant.dt_s)
        applied[i] = p_act

    out_of_band = np.abs(fc - force_ref_n) > settle_band * abs(force_ref_n)
    bad = np.nonzero(out_of_band)[0]
    if bad.size == 0:
        settled, settling_time = True, 0.0
    elif bad[-1] == n - 1:
        settled, settling_time = False, None
    else:
        settled, settling_time = True, (bad[-1] + 1) / gains.loop_rate_hz
    tail = fc[-max(1, n // 10):]
    steady_error = float(np.mean(tail) - force_ref_n)

    rate = gains.loop_rate_hz
    return ForceRun(
        force_reference_n=force_ref_n,
        contact=Trace(rate, fc, TraceUnit.FORCE_N),
        estimated=Trace(rate, est, TraceUnit.FORCE_N),
        theta=Trace(rate, th, TraceUnit.ANGLE_RAD),
        command=Trace(rate, command, TraceUnit.PRESSURE_PA),
        pressure_applied=Trace(rate, applied, TraceUnit.PRESSURE_PA),
        report=ForceTrackingReport(
            settled=settled,
            settling_time_s=settling_time,
            steady_state_error_n=steady_error,
            saturation_limited=saturation_limited,
            force_ceiling_n=ceiling,
        ),
    )
