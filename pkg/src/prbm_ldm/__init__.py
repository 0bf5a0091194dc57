"""Rigid-link model of a pneumatic soft finger.

The package covers the full chain from a free-decay recording to a
closed-loop controller: second-order joint dynamics with
geometry-derived coefficients, logarithmic-decrement identification of
stiffness and damping, a seeded plant simulator, and pressure
controllers for angle tracking and contact force.
"""
from .errors import (
    ConfigError,
    DegenerateFitError,
    DivergenceError,
    EstimationError,
    InstabilityError,
    InsufficientPeaksError,
    NonDecayingError,
    NotUnderdampedError,
    ParameterError,
    PrbmLdmError,
    TraceFileError,
    ValidationError,
)
from .model import (
    DynamicCoefficients,
    FingerGeometry,
    FingerState,
    TipForce,
    coefficients_from_geometry,
    damped_frequency,
    damping_ratio,
    estimate_force,
    inertia_coefficient,
    jacobian,
    jacobian_norm,
    moment_constant,
    natural_frequency,
    pressure_for_angle,
    pressure_for_force,
    tip_normal,
    tip_position,
)
from .signal import (
    CalibrationFit,
    LdmAggregate,
    LdmEstimate,
    PeakSet,
    Trace,
    TraceUnit,
    aggregate_trials,
    butterworth_lowpass,
    calibrate_linear,
    coefficients_from_ldm,
    convert_angle,
    detect_peaks,
    estimate_from_trace,
    log_decrement,
)
from .sim import (
    PlantConfig,
    SimResult,
    contact_force,
    run_free_decay,
    run_pressure_profile,
    run_rigid_stop_hold,
    step,
)
from .control import (
    PidGains,
    PidState,
    ReferenceSpec,
    TrackingReport,
    evaluate_tracking,
    force_controller_step,
    generate_reference,
    pid_step,
    position_controller_step,
    run_force_tracking,
    run_position_tracking,
)
from .configio import (
    FINGER_NAMES,
    ExperimentConfig,
    FingerConfig,
    builtin_finger,
    load_experiment_config,
    load_finger_config,
)
from .traceio import read_trace_csv, write_trace_csv
from .estimators import (
    LinearCalibration,
    LogDecrementEstimator,
    ZeroPhaseLowpass,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "PrbmLdmError", "ValidationError", "ParameterError", "ConfigError",
    "TraceFileError", "EstimationError", "InsufficientPeaksError",
    "NonDecayingError", "NotUnderdampedError", "DegenerateFitError",
    "DivergenceError", "InstabilityError",
    # model
    "FingerGeometry", "DynamicCoefficients", "FingerState", "TipForce",
    "inertia_coefficient", "moment_constant", "coefficients_from_geometry",
    "tip_position", "jacobian", "jacobian_norm", "tip_normal",
    "pressure_for_angle", "pressure_for_force", "estimate_force",
    "natural_frequency", "damping_ratio", "damped_frequency",
    # signal
    "Trace", "TraceUnit", "PeakSet", "LdmEstimate", "LdmAggregate",
    "CalibrationFit", "butterworth_lowpass", "detect_peaks",
    "log_decrement", "coefficients_from_ldm", "estimate_from_trace",
    "aggregate_trials", "calibrate_linear", "convert_angle",
    # sim
    "PlantConfig", "SimResult", "step", "contact_force", "run_free_decay",
    "run_pressure_profile", "run_rigid_stop_hold",
    # control
    "PidGains", "PidState", "ReferenceSpec", "TrackingReport",
    "pid_step", "position_controller_step", "force_controller_step",
    "generate_reference", "evaluate_tracking", "run_position_tracking",
    "run_force_tracking",
    # config and io
    "FINGER_NAMES", "FingerConfig", "ExperimentConfig",
    "load_finger_config", "load_experiment_config", "builtin_finger",
    "read_trace_csv", "write_trace_csv",
    # sklearn-style estimators
    "ZeroPhaseLowpass", "LogDecrementEstimator", "LinearCalibration",
]
