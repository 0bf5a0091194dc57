"""Time-domain plant simulation.

The plant is the rigid-link joint driven through a first-order actuator lag
(solenoid valve plus chamber filling) with hard pressure limits:

    p_act'   = omega_a * (clamp(p_cmd) - p_act)
    A theta'' = N p_act - b theta' - k theta - J(theta) @ F_ext

integrated with a classical fixed-step fourth-order Runge-Kutta scheme.  An
optional rigid stop models a pinched object: crossing the stop angle pins
the joint (the impact is inelastic), and the stop then carries whatever
torque the chamber applies beyond the spring load until that torque drops
to zero again.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, ParameterError, ValidationError
from .model import (
    DynamicCoefficients,
    FingerGeometry,
    FingerState,
    TipForce,
    jacobian_norm,
    natural_frequency,
)
from .signal import Trace, TraceUnit

__all__ = [
    "PlantConfig",
    "SimResult",
    "step",
    "integrate",
    "contact_force",
    "run_free_decay",
    "run_pressure_profile",
    "run_rigid_stop_hold",
]

# the dt guard: at least this many steps per natural period / (2 pi)
_MIN_STEPS_PER_RADIAN = 20.0


@dataclass(frozen=True)
class PlantConfig:
    """Simulation setup for one finger."""

    geometry: FingerGeometry
    coefficients: DynamicCoefficients
    dt_s: float = 1e-3
    pressure_limits_pa: tuple[float, float] = (0.0, 200e3)
    actuator_bandwidth_hz: float = 10.0

    def __post_init__(self):
        if not (self.dt_s > 0):
            raise ValidationError("dt_s", "must be > 0")
        wn = natural_frequency(self.coefficients)
        dt_max = 1.0 / (_MIN_STEPS_PER_RADIAN * wn)
        if self.dt_s > dt_max:
            raise ValidationError(
                "dt_s", f"must be <= {dt_max:.6g} s to resolve a natural "
                f"frequency of {wn:.6g} rad/s")
        lo, hi = self.pressure_limits_pa
        if not (lo >= 0 and hi > lo):
            raise ValidationError("pressure_limits_pa",
                                  "need 0 <= lower < upper")
        if not (self.actuator_bandwidth_hz > 0):
            raise ValidationError("actuator_bandwidth_hz", "must be > 0")


@dataclass(frozen=True)
class SimResult:
    """Recorded channels of one run, all at the same rate and length."""

    theta: Trace
    theta_dot: Trace
    pressure_applied: Trace
    tip_force_x: Trace
    tip_force_y: Trace

    def __post_init__(self):
        traces = (self.theta, self.theta_dot, self.pressure_applied,
                  self.tip_force_x, self.tip_force_y)
        n = len(traces[0])
        rate = traces[0].sample_rate_hz
        for tr in traces:
            if len(tr) != n or tr.sample_rate_hz != rate:
                raise ValidationError(
                    "traces", "all channels must share length and rate")

    def channels(self) -> dict[str, Trace]:
        return {
            "theta": self.theta,
            "theta_dot": self.theta_dot,
            "pressure_applied": self.pressure_applied,
            "tip_force_x": self.tip_force_x,
            "tip_force_y": self.tip_force_y,
        }


def integrate(plant: PlantConfig, theta: float, omega: float, p_act: float,
              command_pa: float, n_steps: int, fx_N: float = 0.0,
              fy_N: float = 0.0, stop_theta_rad: float | None = None,
              pinned: bool = False, t0_s: float = 0.0,
              ) -> tuple[float, float, float, bool]:
    """Advance the plant n_steps of dt_s under a held command.

    This is the single integration core behind every runner and the control
    loops.  Returns (theta, omega, p_act, pinned).  While pinned the joint
    is held at the stop and only the actuator state evolves (exactly, since
    the lag alone is linear); the joint releases as soon as the chamber
    torque no longer presses into the stop.
    """
    c = plant.coefficients
    a_inv = 1.0 / c.inertia_A
    k = c.stiffness_k
    b = c.damping_b
    mom = c.moment_N
    r = jacobian_norm(plant.geometry)
    dt = plant.dt_s
    lo, hi = plant.pressure_limits_pa
    w_a = 2.0 * math.pi * plant.actuator_bandwidth_hz
    u = min(max(command_pa, lo), hi)
    decay = math.exp(-w_a * dt)

    # external tip force enters as torque J(theta) @ F
    def deriv(th, om, p):
        tau_ext = -r * (math.sin(th) * fx_N + math.cos(th) * fy_N)
        return (om,
                (mom * p - b * om - k * th - tau_ext) * a_inv,
                w_a * (u - p))

    for i in range(n_steps):
        if pinned:
            p_act = u + (p_act - u) * decay
            if mom * p_act - k * stop_theta_rad <= 0.0:
                pinned = False
                theta, omega = stop_theta_rad, 0.0
            continue

        d1 = deriv(theta, omega, p_act)
        d2 = deriv(theta + 0.5 * dt * d1[0], omega + 0.5 * dt * d1[1],
                   p_act + 0.5 * dt * d1[2])
        d3 = deriv(theta + 0.5 * dt * d2[0], omega + 0.5 * dt * d2[1],
                   p_act + 0.5 * dt * d2[2])
        d4 = deriv(theta + dt * d3[0], omega + dt * d3[1], p_act + dt * d3[2])
        theta += dt * (d1[0] + 2.0 * d2[0] + 2.0 * d3[0] + d4[0]) / 6.0
        omega += dt * (d1[1] + 2.0 * d2[1] + 2.0 * d3[1] + d4[1]) / 6.0
        p_act += dt * (d1[2] + 2.0 * d2[2] + 2.0 * d3[2] + d4[2]) / 6.0
        p_act = min(max(p_act, lo), hi)

        if not (math.isfinite(theta) and math.isfinite(omega)):
            raise DivergenceError(dt, t0_s + (i + 1) * dt)
        if stop_theta_rad is not None and theta >= stop_theta_rad:
            # inelastic impact: the stop absorbs the joint momentum
            theta, omega, pinned = stop_theta_rad, 0.0, True
    return theta, omega, p_act, pinned


def step(plant: PlantConfig, state: FingerState, command_pa: float,
         p_act_pa: float, f_ext: TipForce | None = None,
         ) -> tuple[FingerState, float]:
    """One dt_s step; returns the new state and new applied pressure."""
    fx, fy = (f_ext.fx_N, f_ext.fy_N) if f_ext is not None else (0.0, 0.0)
    theta, omega, p_act, _ = integrate(
        plant, state.theta_rad, state.theta_dot_rad_s, p_act_pa, command_pa,
        1, fx_N=fx, fy_N=fy)
    return FingerState(theta_rad=theta, theta_dot_rad_s=omega), p_act


def contact_force(plant: PlantConfig, p_act_pa: float,
                  stop_theta_rad: float, pinned: bool) -> float:
    """Force the stop currently returns along the tip-normal direction.

    While pinned the stop carries the chamber torque beyond the spring
    load, N * p - k * theta_stop, spread over the tip lever arm.  A free
    finger exerts nothing on the stop.
    """
    if not pinned:
        return 0.0
    c = plant.coefficients
    tau = c.moment_N * p_act_pa - c.stiffness_k * stop_theta_rad
    return max(tau, 0.0) / jacobian_norm(plant.geometry)


def _output_stride(plant: PlantConfig, output_rate_hz: float) -> int:
    steps_per_sample = 1.0 / (output_rate_hz * plant.dt_s)
    stride = int(round(steps_per_sample))
    if stride < 1 or abs(steps_per_sample - stride) > 1e-9:
        raise ParameterError(
            f"output rate {output_rate_hz} Hz must divide the step rate "
            f"{1.0 / plant.dt_s:.6g} Hz")
    return stride


def run_free_decay(plant: PlantConfig, theta0_rad: float, duration_s: float,
                   *, output_rate_hz: float = 100.0, noise_sd_rad: float = 0.0,
                   seed: int | None = None) -> SimResult:
    """Release from rest at theta0 with zero pressure and record the ring-down.

    Gaussian measurement noise (seeded, reproducible) is added to the
    recorded angle only; the underlying integration is exact in the sense
    that the same seed gives bit-identical output.
    """
    if theta0_rad == 0.0:
        raise ParameterError("theta0_rad must be nonzero for a decay run")
    if duration_s <= 0:
        raise ParameterError(f"duration_s must be > 0, got {duration_s}")
    stride = _output_stride(plant, output_rate_hz)
    n_out = int(round(duration_s * output_rate_hz)) + 1

    theta, omega, p_act = theta0_rad, 0.0, 0.0
    th = np.empty(n_out)
    om = np.empty(n_out)
    pr = np.empty(n_out)
    th[0], om[0], pr[0] = theta, omega, p_act
    for i in range(1, n_out):
        theta, omega, p_act, _ = integrate(
            plant, theta, omega, p_act, 0.0, stride,
            t0_s=(i - 1) * stride * plant.dt_s)
        th[i], om[i], pr[i] = theta, omega, p_act

    if noise_sd_rad < 0:
        raise ParameterError("noise_sd_rad must be >= 0")
    if noise_sd_rad > 0:
        rng = np.random.default_rng(seed)
        th = th + rng.normal(0.0, noise_sd_rad, n_out)

    zeros = np.zeros(n_out)
    return SimResult(
        theta=Trace(output_rate_hz, th, TraceUnit.ANGLE_RAD),
        theta_dot=Trace(output_rate_hz, om, TraceUnit.ANGLE_RAD),
        pressure_applied=Trace(output_rate_hz, pr, TraceUnit.PRESSURE_PA),
        tip_force_x=Trace(output_rate_hz, zeros, TraceUnit.FORCE_N),
        tip_force_y=Trace(output_rate_hz, zeros, TraceUnit.FORCE_N),
    )


def run_pressure_profile(plant: PlantConfig, command: Trace,
                         f_ext: TipForce | None = None) -> SimResult:
    """Track a commanded pressure trace (zero-order hold between samples).

    The command sample rate must divide the integration rate.  Channels are
    recorded at the command rate, each sample taken just before the
    corresponding command interval starts.
    """
    if command.unit is not TraceUnit.PRESSURE_PA:
        raise ParameterError(
            f"command trace must be pressure_Pa, got {command.unit.value}")
    stride = _output_stride(plant, command.sample_rate_hz)
    fx, fy = (f_ext.fx_N, f_ext.fy_N) if f_ext is not None else (0.0, 0.0)

    n = len(command)
    theta, omega, p_act = 0.0, 0.0, 0.0
    th = np.empty(n)
    om = np.empty(n)
    pr = np.empty(n)
    for i, u in enumerate(command.values):
        th[i], om[i], pr[i] = theta, omega, p_act
        theta, omega, p_act, _ = integrate(
            plant, theta, omega, p_act, float(u), stride, fx_N=fx, fy_N=fy,
            t0_s=i * stride * plant.dt_s)

    rate = command.sample_rate_hz
    return SimResult(
        theta=Trace(rate, th, TraceUnit.ANGLE_RAD),
        theta_dot=Trace(rate, om, TraceUnit.ANGLE_RAD),
        pressure_applied=Trace(rate, pr, TraceUnit.PRESSURE_PA),
        tip_force_x=Trace(rate, np.full(n, fx), TraceUnit.FORCE_N),
        tip_force_y=Trace(rate, np.full(n, fy), TraceUnit.FORCE_N),
    )


def run_rigid_stop_hold(plant: PlantConfig, stop_theta_rad: float,
                        command_pa: float, duration_s: float, *,
                        theta0_rad: float = 0.0,
                        output_rate_hz: float = 100.0,
                        ) -> tuple[SimResult, Trace]:
    """Hold a constant pressure command against a rigid stop.

    The finger starts free at theta0, bends until it meets the stop, and
    then loads it.  Returns the run plus the scalar contact force trace
    along the tip normal.
    """
    if stop_theta_rad <= theta0_rad:
        raise ParameterError("stop_theta_rad must exceed theta0_rad")
    if duration_s <= 0:
        raise ParameterError(f"duration_s must be > 0, got {duration_s}")
    stride = _output_stride(plant, output_rate_hz)
    n_out = int(round(duration_s * output_rate_hz)) + 1

    theta, omega, p_act, pinned = theta0_rad, 0.0, 0.0, False
    th = np.empty(n_out)
    om = np.empty(n_out)
    pr = np.empty(n_out)
    fc = np.empty(n_out)
    for i in range(n_out):
        th[i], om[i], pr[i] = theta, omega, p_act
        fc[i] = contact_force(plant, p_act, stop_theta_rad, pinned)
        if i == n_out - 1:
            break
        theta, omega, p_act, pinned = integrate(
            plant, theta, omega, p_act, command_pa, stride,
            stop_theta_rad=stop_theta_rad, pinned=pinned,
            t0_s=i * stride * plant.dt_s)

    # world-frame force the stop applies to the tip
    fx = fc * (-math.sin(stop_theta_rad))
    fy = fc * (-math.cos(stop_theta_rad))
    rate = output_rate_hz
    result = SimResult(
        theta=Trace(rate, th, TraceUnit.ANGLE_RAD),
        theta_dot=Trace(rate, om, TraceUnit.ANGLE_RAD),
        pressure_applied=Trace(rate, pr, TraceUnit.PRESSURE_PA),
        tip_force_x=Trace(rate, fx, TraceUnit.FORCE_N),
        tip_force_y=Trace(rate, fy, TraceUnit.FORCE_N),
    )
    return result, Trace(rate, fc, TraceUnit.FORCE_N)
