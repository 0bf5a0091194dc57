"""Rigid-link model of a pneumatic bending finger.

The finger is treated as a rigid proximal segment of length (1 - gamma) * l
and a distal segment of length gamma * l hinged at a torsional flexure.
Chamber pressure acts through a fixed moment constant N, the flexure through
a linear stiffness k and viscous damping b, so the joint obeys

    A * theta_dd + b * theta_d + k * theta = N * P - J(theta) @ F_ext

with A the effective rotational inertia and J the row that maps an external
tip force to flexure torque.  All angles are radians, pressures Pa, forces N,
lengths m.  Degree conversion happens only at the command-line boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = [
    "FingerGeometry",
    "DynamicCoefficients",
    "FingerState",
    "TipForce",
    "inertia_coefficient",
    "moment_constant",
    "coefficients_from_geometry",
    "tip_position",
    "jacobian",
    "jacobian_norm",
    "tip_normal",
    "pressure_for_angle",
    "pressure_for_force",
    "estimate_force",
    "natural_frequency",
    "damping_ratio",
    "damped_frequency",
]


def _require(ok: bool, field: str, message: str) -> None:
    if not ok:
        raise ValidationError(field, message)


def _finite(value: float, field: str) -> float:
    value = float(value)
    _require(math.isfinite(value), field, f"must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class FingerGeometry:
    """Physical description of one finger.

    width_e_m is the full chamber width e, wall_a_m the wall thickness a,
    chamber_b_m the chamber height b, and arm_larm_m the lever offset
    between the chamber floor and the flexure axis.
    """

    mass_kg: float
    length_m: float
    gamma: float            # flexible fraction of total length, in (0, 1)
    width_e_m: float
    wall_a_m: float
    chamber_b_m: float
    arm_larm_m: float = 0.0

    def __post_init__(self):
        for name in ("mass_kg", "length_m", "gamma", "width_e_m", "wall_a_m",
                     "chamber_b_m", "arm_larm_m"):
            object.__setattr__(self, name, _finite(getattr(self, name), name))
        _require(self.mass_kg > 0, "mass_kg", "must be > 0")
        _require(self.length_m > 0, "length_m", "must be > 0")
        _require(0.0 < self.gamma < 1.0, "gamma", "must be in (0, 1)")
        _require(self.wall_a_m > 0, "wall_a_m", "must be > 0")
        _require(self.width_e_m > 2.0 * self.wall_a_m, "width_e_m",
                 "must exceed twice the wall thickness")
        _require(self.chamber_b_m > 0, "chamber_b_m", "must be > 0")
        _require(self.arm_larm_m >= 0, "arm_larm_m", "must be >= 0")


@dataclass(frozen=True)
class DynamicCoefficients:
    """Lumped joint coefficients, stored in physical units.

    stiffness_k is N*m/rad, damping_b is N*m*s/rad, inertia_A is kg*m^2,
    moment_N is m^3 (torque per unit pressure).
    """

    inertia_A: float
    stiffness_k: float
    damping_b: float
    moment_N: float

    def __post_init__(self):
        for name in ("inertia_A", "stiffness_k", "damping_b", "moment_N"):
            object.__setattr__(self, name, _finite(getattr(self, name), name))
        _require(self.inertia_A > 0, "inertia_A", "must be > 0")
        _require(self.stiffness_k > 0, "stiffness_k", "must be > 0")
        _require(self.damping_b >= 0, "damping_b", "must be >= 0")
        _require(self.moment_N > 0, "moment_N", "must be > 0")


@dataclass(frozen=True)
class FingerState:
    """Joint angle and rate."""

    theta_rad: float
    theta_dot_rad_s: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta_rad", _finite(self.theta_rad, "theta_rad"))
        object.__setattr__(self, "theta_dot_rad_s",
                           _finite(self.theta_dot_rad_s, "theta_dot_rad_s"))


@dataclass(frozen=True)
class TipForce:
    """External force applied at the fingertip, world frame."""

    fx_N: float
    fy_N: float

    def __post_init__(self):
        object.__setattr__(self, "fx_N", _finite(self.fx_N, "fx_N"))
        object.__setattr__(self, "fy_N", _finite(self.fy_N, "fy_N"))

    def as_array(self) -> np.ndarray:
        return np.array([self.fx_N, self.fy_N])


def inertia_coefficient(geometry: FingerGeometry) -> float:
    """Effective rotational inertia A = (7/12) * m * gamma^3 * l^2."""
    return (7.0 / 12.0) * geometry.mass_kg * geometry.gamma ** 3 \
        * geometry.length_m ** 2


def moment_constant(geometry: FingerGeometry) -> float:
    """Torque produced per unit chamber pressure.

    Pressure acts on a strip of width (e - 2a) between lever arms
    a + l_arm and a + b + l_arm, so the moment integral collapses to

        N = (e - 2a) * ((a + b + l_arm)^2 - (a + l_arm)^2) / 2
    """
    g = geometry
    h_lo = g.wall_a_m + g.arm_larm_m
    h_hi = g.wall_a_m + g.chamber_b_m + g.arm_larm_m
    return (g.width_e_m - 2.0 * g.wall_a_m) * (h_hi ** 2 - h_lo ** 2) / 2.0


def coefficients_from_geometry(geometry: FingerGeometry, stiffness_k: float,
                               damping_b: float) -> DynamicCoefficients:
    """Bundle identified (k, b) with the geometry-derived A and N."""
    return DynamicCoefficients(
        inertia_A=inertia_coefficient(geometry),
        stiffness_k=stiffness_k,
        damping_b=damping_b,
        moment_N=moment_constant(geometry),
    )


def tip_position(geometry: FingerGeometry, theta_rad: float) -> tuple[float, float]:
    """Fingertip position in the base frame.

    The rigid proximal segment contributes a constant (1 - gamma) * l along
    x; the distal half-link of length gamma * l / 2 rotates by theta.
    """
    r = geometry.gamma * geometry.length_m / 2.0
    x = (1.0 - geometry.gamma) * geometry.length_m + r * math.cos(theta_rad)
    y = r * math.sin(theta_rad)
    return x, y


def jacobian(geometry: FingerGeometry, theta_rad: float) -> np.ndarray:
    """Row J(theta) mapping a tip force to flexure torque, tau = J @ F.

    J = [-(gamma*l/2) * sin(theta), -(gamma*l/2) * cos(theta)].  Its norm is
    gamma*l/2 for every angle, which keeps the force estimate below well
    conditioned over the whole stroke.
    """
    r = geometry.gamma * geometry.length_m / 2.0
    return np.array([-r * math.sin(theta_rad), -r * math.cos(theta_rad)])


def jacobian_norm(geometry: FingerGeometry) -> float:
    """Euclidean norm of the torque row, gamma * l / 2, independent of angle."""
    return geometry.gamma * geometry.length_m / 2.0


def tip_normal(theta_rad: float) -> np.ndarray:
    """Unit direction along which the tip transmits contact force.

    This is the normalized torque row [-sin(theta), -cos(theta)]; forces
    orthogonal to it produce no flexure torque and are invisible to the
    pressure-based estimator.
    """
    return np.array([-math.sin(theta_rad), -math.cos(theta_rad)])


def pressure_for_angle(coefficients: DynamicCoefficients,
                       theta_rad: float) -> float:
    """Static pressure holding the joint at theta with no external load.

    P = k * theta / N.  Negative angles give negative pressures; clamping to
    the actuator range is the caller's job.
    """
    return coefficients.stiffness_k * theta_rad / coefficients.moment_N


def pressure_for_force(coefficients: DynamicCoefficients,
                       geometry: FingerGeometry, theta_rad: float,
                       force: TipForce) -> float:
    """Static pressure holding theta against an external tip force.

    P = (k * theta + J(theta) @ F) / N.  With a zero force this reduces
    exactly to pressure_for_angle.
    """
    j_f = float(jacobian(geometry, theta_rad) @ force.as_array())
    return (coefficients.stiffness_k * theta_rad + j_f) / coefficients.moment_N


def estimate_force(coefficients: DynamicCoefficients,
                   geometry: FingerGeometry, pressure_pa: float,
                   theta_rad: float) -> TipForce:
    """Quasi-static tip force consistent with (pressure, angle).

    Inverts tau_ext = J @ F through the pseudoinverse of the single torque
    row: F = J^T * (N * P - k * theta) / |J|^2.  The result is the force
    component along the contact direction; anything orthogonal to it is
    unobservable from pressure and angle alone.
    """
    residual = coefficients.moment_N * pressure_pa \
        - coefficients.stiffness_k * theta_rad
    j = jacobian(geometry, theta_rad)
    f = j * (residual / float(j @ j))
    return TipForce(fx_N=f[0], fy_N=f[1])


def natural_frequency(coefficients: DynamicCoefficients) -> float:
    """Undamped natural frequency sqrt(k / A), rad/s."""
    return math.sqrt(coefficients.stiffness_k / coefficients.inertia_A)


def damping_ratio(coefficients: DynamicCoefficients) -> float:
    """Damping ratio b / (2 * sqrt(k * A))."""
    return coefficients.damping_b / (
        2.0 * math.sqrt(coefficients.stiffness_k * coefficients.inertia_A))


def damped_frequency(coefficients: DynamicCoefficients) -> float:
    """Damped oscillation frequency; requires the joint to be underdamped."""
    zeta = damping_ratio(coefficients)
    if zeta >= 1.0:
        raise ValidationError("damping_b", "joint is not underdamped")
    return natural_frequency(coefficients) * math.sqrt(1.0 - zeta * zeta)
