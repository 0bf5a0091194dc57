"""Configuration files.

Finger files and experiment files are INI text.  A finger file carries the
geometry and identified coefficients plus optional plant and controller
sections; an experiment file names a set of fingers and includes their
finger files by path.  The exact key set is documented in the cli module.
Everything is validated strictly: unknown sections or keys are rejected so
typos fail loudly instead of silently using a default.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .control import PidGains
from .errors import ConfigError, ValidationError
from .model import DynamicCoefficients, FingerGeometry, coefficients_from_geometry
from .sim import PlantConfig

__all__ = [
    "FINGER_NAMES",
    "FingerConfig",
    "ExperimentConfig",
    "load_finger_config",
    "builtin_finger",
    "load_experiment_config",
]

FINGER_NAMES = ("thumb", "index", "middle", "ring", "little")

_GEOMETRY_KEYS = ("mass_kg", "length_m", "gamma", "width_e_m", "wall_a_m",
                  "chamber_b_m", "arm_larm_m")
_PLANT_KEYS = ("dt_s", "pressure_min_pa", "pressure_max_pa",
               "actuator_bandwidth_hz")
_GAIN_KEYS = ("kp", "ki", "kd", "integral_limit", "derivative_filter_hz",
              "loop_rate_hz")

# conservative fallback, stable on every packaged plant; the packaged files
# override it with per-finger tuned values
_DEFAULT_POSITION_GAINS = PidGains(kp=8e3, ki=4e5, kd=1.5e3,
                                   integral_limit=0.15)
_DEFAULT_FORCE_GAINS = PidGains(kp=5e3, ki=2e5, kd=0.0, integral_limit=0.25)


@dataclass(frozen=True)
class FingerConfig:
    """Everything needed to simulate and control one finger."""

    name: str
    geometry: FingerGeometry
    coefficients: DynamicCoefficients
    plant: PlantConfig
    position_gains: PidGains
    force_gains: PidGains


@dataclass(frozen=True)
class ExperimentConfig:
    """A named set of fingers plus experiment-wide settings."""

    fingers: dict[str, FingerConfig]
    seed: int | None = None
    out_dir: str | None = None

    def __post_init__(self):
        if not self.fingers:
            raise ValidationError("fingers", "need at least one finger")


def _parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    # keys are matched strictly, including case (inertia_A, moment_N)
    parser.optionxform = str
    return parser


def _read_ini(text: str, source: str) -> configparser.ConfigParser:
    parser = _parser()
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return parser


def _get_float(parser, section: str, key: str, source: str,
               default: float | None = None) -> float:
    if not parser.has_option(section, key):
        if default is not None:
            return default
        raise ConfigError(f"{source}: missing key '{key}' in [{section}]")
    raw = parser.get(section, key)
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(
            f"{source}: [{section}] {key} = {raw!r} is not a number") from exc


def _check_keys(parser, section: str, allowed: tuple[str, ...],
                source: str) -> None:
    for key in parser.options(section):
        if key not in allowed:
            raise ConfigError(
                f"{source}: unknown key '{key}' in [{section}]")


def _gains_from(parser, section: str, source: str,
                default: PidGains) -> PidGains:
    if not parser.has_section(section):
        return default
    _check_keys(parser, section, _GAIN_KEYS, source)
    kwargs = {}
    for key in _GAIN_KEYS:
        kwargs[key] = _get_float(parser, section, key, source,
                                 default=getattr(default, key))
    try:
        return PidGains(**kwargs)
    except ValidationError as exc:
        raise ConfigError(f"{source}: [{section}] {exc}") from exc


def _finger_from_parser(parser: configparser.ConfigParser,
                        source: str) -> FingerConfig:
    known_sections = ("finger", "geometry", "coefficients", "plant",
                      "controller.position", "controller.force")
    for section in parser.sections():
        if section not in known_sections:
            raise ConfigError(f"{source}: unknown section [{section}]")
    for section in ("finger", "geometry", "coefficients"):
        if not parser.has_section(section):
            raise ConfigError(f"{source}: missing section [{section}]")

    _check_keys(parser, "finger", ("name",), source)
    name = parser.get("finger", "name", fallback=None)
    if name not in FINGER_NAMES:
        raise ConfigError(
            f"{source}: [finger] name must be one of {', '.join(FINGER_NAMES)}, "
            f"got {name!r}")

    _check_keys(parser, "geometry", _GEOMETRY_KEYS, source)
    geometry_kwargs = {key: _get_float(parser, "geometry", key, source)
                       for key in _GEOMETRY_KEYS if key != "arm_larm_m"}
    # no moment arm offset unless the finger actually has one
    geometry_kwargs["arm_larm_m"] = _get_float(parser, "geometry",
                                               "arm_larm_m", source,
                                               default=0.0)
    try:
        geometry = FingerGeometry(**geometry_kwargs)
    except ValidationError as exc:
        raise ConfigError(f"{source}: [geometry] {exc}") from exc

    _check_keys(parser, "coefficients",
                ("stiffness_k", "damping_b", "inertia_A", "moment_N"), source)
    stiffness = _get_float(parser, "coefficients", "stiffness_k", source)
    damping = _get_float(parser, "coefficients", "damping_b", source)
    try:
        coefficients = coefficients_from_geometry(geometry, stiffness, damping)
        if parser.has_option("coefficients", "inertia_A") \
                or parser.has_option("coefficients", "moment_N"):
            coefficients = DynamicCoefficients(
                inertia_A=_get_float(parser, "coefficients", "inertia_A",
                                     source, default=coefficients.inertia_A),
                stiffness_k=stiffness,
                damping_b=damping,
                moment_N=_get_float(parser, "coefficients", "moment_N",
                                    source, default=coefficients.moment_N),
            )
    except ValidationError as exc:
        raise ConfigError(f"{source}: [coefficients] {exc}") from exc

    plant_kwargs = {}
    if parser.has_section("plant"):
        _check_keys(parser, "plant", _PLANT_KEYS, source)
        plant_kwargs["dt_s"] = _get_float(parser, "plant", "dt_s", source,
                                          default=1e-3)
        lo = _get_float(parser, "plant", "pressure_min_pa", source, default=0.0)
        hi = _get_float(parser, "plant", "pressure_max_pa", source,
                        default=200e3)
        plant_kwargs["pressure_limits_pa"] = (lo, hi)
        plant_kwargs["actuator_bandwidth_hz"] = _get_float(
            parser, "plant", "actuator_bandwidth_hz", source, default=10.0)
    try:
        plant = PlantConfig(geometry=geometry, coefficients=coefficients,
                            **plant_kwargs)
    except ValidationError as exc:
        raise ConfigError(f"{source}: [plant] {exc}") from exc

    return FingerConfig(
        name=name,
        geometry=geometry,
        coefficients=coefficients,
        plant=plant,
        position_gains=_gains_from(parser, "controller.position", source,
                                   _DEFAULT_POSITION_GAINS),
        force_gains=_gains_from(parser, "controller.force", source,
                                _DEFAULT_FORCE_GAINS),
    )


def load_finger_config(path: str | Path) -> FingerConfig:
    """Load and validate a finger file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read finger config {path}: {exc}") from exc
    return _finger_from_parser(_read_ini(text, str(path)), str(path))


def builtin_finger(name: str) -> FingerConfig:
    """Load one of the packaged finger defaults."""
    if name not in FINGER_NAMES:
        raise ConfigError(
            f"unknown finger {name!r}; choose from {', '.join(FINGER_NAMES)}")
    source = f"builtin:{name}"
    text = (resources.files("prbm_ldm.data") / "fingers" / f"{name}.ini"
            ).read_text()
    return _finger_from_parser(_read_ini(text, source), source)


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    """Load an experiment file and every finger file it includes.

    The [fingers] section maps a finger name to either a path (resolved
    relative to the experiment file) or the word 'builtin' for the packaged
    defaults of that finger.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read experiment config {path}: {exc}") from exc
    parser = _read_ini(text, str(path))
    source = str(path)

    for section in parser.sections():
        if section not in ("experiment", "fingers"):
            raise ConfigError(f"{source}: unknown section [{section}]")
    if not parser.has_section("fingers"):
        raise ConfigError(f"{source}: missing section [fingers]")

    seed = None
    out_dir = None
    if parser.has_section("experiment"):
        _check_keys(parser, "experiment", ("seed", "out_dir"), source)
        if parser.has_option("experiment", "seed"):
            raw = parser.get("experiment", "seed")
            try:
                seed = int(raw)
            except ValueError as exc:
                raise ConfigError(
                    f"{source}: [experiment] seed = {raw!r} is not an "
                    f"integer") from exc
        if parser.has_option("experiment", "out_dir"):
            out_dir = parser.get("experiment", "out_dir")

    fingers: dict[str, FingerConfig] = {}
    for name in parser.options("fingers"):
        if name not in FINGER_NAMES:
            raise ConfigError(
                f"{source}: [fingers] unknown finger name '{name}'")
        value = parser.get("fingers", name)
        if value == "builtin":
            finger = builtin_finger(name)
        else:
            finger = load_finger_config((path.parent / value).resolve())
        if finger.name != name:
            raise ConfigError(
                f"{source}: [fingers] entry '{name}' points at a config "
                f"for '{finger.name}'")
        fingers[name] = finger
    try:
        return ExperimentConfig(fingers=fingers, seed=seed, out_dir=out_dir)
    except ValidationError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
