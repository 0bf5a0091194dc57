"""Command-line interface.

Subcommands
-----------
estimate    identify joint stiffness and damping from decay traces
            (synthetic batches by default, or recorded CSV files)
simulate    open-loop plant scenarios: free-decay, ramp, hold-force
track       closed-loop angle tracking, model feedforward or bare PID
force       closed-loop force regulation against a rigid stop
calibrate   least-squares sensor calibration from paired CSVs

Every command accepts --out DIR (default: $PRBM_LDM_OUT or ./prbm-ldm-out)
and --seed N (default 0) and writes a deterministic report.json plus a
readable report.txt; identical configuration and seed give byte-identical
files.  Exit codes: 0 success, 2 configuration problem, 3 file problem,
4 estimation impossible, 5 closed-loop instability or divergence.

Configuration files
-------------------
A finger file is INI text with these sections (keys shown with units):

    [finger]       name = thumb|index|middle|ring|little
    [geometry]     mass_kg, length_m, gamma, width_e_m, wall_a_m,
                   chamber_b_m, arm_larm_m
    [coefficients] stiffness_k (N*m/rad), damping_b (N*m*s/rad);
                   optional inertia_A (kg*m^2), moment_N (m^3) override the
                   values derived from the geometry
    [plant]        optional: dt_s, pressure_min_pa, pressure_max_pa,
                   actuator_bandwidth_hz
    [controller.position], [controller.force]
                   optional: kp, ki, kd, integral_limit,
                   derivative_filter_hz, loop_rate_hz

An experiment file collects fingers and shared settings:

    [experiment]   optional: seed, out_dir
    [fingers]      <name> = <path to finger file, relative to this file>
                   or the word 'builtin' for the packaged defaults

Packaged defaults exist for all five fingers (--finger NAME).
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .configio import (
    FINGER_NAMES,
    FingerConfig,
    builtin_finger,
    load_experiment_config,
    load_finger_config,
)
from .control import (
    ReferenceSpec,
    run_force_tracking,
    run_position_tracking,
)
from .errors import (
    ConfigError,
    DivergenceError,
    EstimationError,
    InstabilityError,
    ParameterError,
    PrbmLdmError,
    TraceFileError,
    ValidationError,
)
from .model import TipForce, pressure_for_force, tip_normal
from .report import build_report, format_table, sha256_of_file, write_report
from .sim import run_free_decay, run_pressure_profile, run_rigid_stop_hold
from .signal import (
    Trace,
    TraceUnit,
    aggregate_trials,
    estimate_from_trace,
    calibrate_linear,
)
from .traceio import read_trace_csv, write_trace_csv

_OUT_ENV = "PRBM_LDM_OUT"


def _add_finger_selection(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--finger", choices=FINGER_NAMES,
                       help="use the packaged defaults for this finger")
    group.add_argument("--finger-config", metavar="PATH",
                       help="load a single finger file")
    group.add_argument("--config", metavar="PATH",
                       help="load an experiment file (may name several fingers)")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None,
                        help="random seed (default: experiment file or 0)")
    parser.add_argument("--out", metavar="DIR", default=None,
                        help=f"output directory (default: ${_OUT_ENV} or "
                        f"./prbm-ldm-out)")


def _select(args) -> tuple[dict[str, FingerConfig], int | None, str | None]:
    """Resolve finger selection to an ordered name -> config mapping."""
    if args.config:
        experiment = load_experiment_config(args.config)
        return experiment.fingers, experiment.seed, experiment.out_dir
    if args.finger_config:
        finger = load_finger_config(args.finger_config)
        return {finger.name: finger}, None, None
    name = args.finger or "index"
    return {name: builtin_finger(name)}, None, None


def _resolve_out(args, config_out: str | None) -> Path:
    if args.out:
        return Path(args.out)
    if config_out:
        return Path(config_out)
    return Path(os.environ.get(_OUT_ENV, "prbm-ldm-out"))


def _resolve_seed(args, config_seed: int | None) -> int:
    if args.seed is not None:
        return args.seed
    if config_seed is not None:
        return config_seed
    return 0


def _finger_echo(finger: FingerConfig) -> dict:
    echo = {
        "name": finger.name,
        "geometry": asdict(finger.geometry),
        "coefficients": asdict(finger.coefficients),
        "plant": {
            "dt_s": finger.plant.dt_s,
            "pressure_limits_pa": list(finger.plant.pressure_limits_pa),
            "actuator_bandwidth_hz": finger.plant.actuator_bandwidth_hz,
        },
        "position_gains": asdict(finger.position_gains),
        "force_gains": asdict(finger.force_gains),
    }
    return echo


def _write_channels(directory: Path, channels: dict[str, Trace]) -> dict:
    directory.mkdir(parents=True, exist_ok=True)
    checksums = {}
    for name, trace in channels.items():
        path = directory / f"{name}.csv"
        write_trace_csv(path, trace)
        checksums[f"{name}.csv"] = sha256_of_file(path)
    return checksums


# ---------------------------------------------------------------- estimate

def cmd_estimate(args) -> int:
    fingers, cfg_seed, cfg_out = _select(args)
    out_dir = _resolve_out(args, cfg_out)
    seed = _resolve_seed(args, cfg_seed)

    if args.traces and len(fingers) != 1:
        raise ConfigError("--traces needs a single-finger selection so the "
                          "rotational inertia is unambiguous")

    results: dict = {"fingers": {}}
    checksums: dict[str, str] = {}
    rows = []
    any_success = False
    seed_root = np.random.SeedSequence(seed)
    trial_seeds = seed_root.spawn(len(fingers) * args.trials)

    for f_idx, (name, finger) in enumerate(fingers.items()):
        inertia = finger.coefficients.inertia_A
        estimates = []
        trials: list[dict] = []
        errors: list[dict] = []

        if args.traces:
            sources = []
            for path in args.traces:
                trace = read_trace_csv(path)
                checksums[str(path)] = sha256_of_file(path)
                sources.append((str(path), trace))
        else:
            sources = []
            for t in range(args.trials):
                sim = run_free_decay(
                    finger.plant, math.radians(args.theta0_deg),
                    args.duration_s, output_rate_hz=args.sample_rate_hz,
                    noise_sd_rad=math.radians(args.noise_sd_deg),
                    seed=trial_seeds[f_idx * args.trials + t])
                sources.append((f"synthetic-{t:03d}", sim.theta))

        for label, trace in sources:
            try:
                est = estimate_from_trace(
                    trace, inertia, cutoff_hz=args.cutoff_hz,
                    filter_order=args.filter_order,
                    min_prominence_frac=args.prominence_frac)
            except EstimationError as exc:
                errors.append({"trace": label, "error": str(exc)})
                continue
            estimates.append(est)
            trials.append({
                "trace": label,
                "stiffness_k": est.stiffness_k,
                "damping_b": est.damping_b,
                "delta": est.delta,
                "zeta": est.zeta,
                "omega_n_rad_s": est.omega_n_rad_s,
                "n_peaks": est.n_peaks_used,
            })

        entry: dict = {
            "inertia_A": inertia,
            "trials": trials,
            "errors": errors,
        }
        if estimates:
            any_success = True
            agg = aggregate_trials(estimates)
            entry["aggregate"] = {
                "n_trials": agg.n_trials,
                "stiffness_k": agg.stiffness_k,
                "stiffness_k_sd": agg.stiffness_k_sd,
                "damping_b": agg.damping_b,
                "damping_b_sd": agg.damping_b_sd,
                "mean_peaks_used": agg.mean_peaks_used,
            }
            rows.append([name, f"{agg.stiffness_k:.4f}",
                         f"{agg.stiffness_k_sd:.4f}", f"{agg.damping_b:.6f}",
                         f"{agg.damping_b_sd:.6f}", str(agg.n_trials),
                         str(len(errors))])
        else:
            rows.append([name, "-", "-", "-", "-", "0", str(len(errors))])
        results["fingers"][name] = entry

    if not any_success:
        raise EstimationError(
            "no trace of any finger yielded an estimate; see the per-trace "
            "errors above")

    config_echo = {
        "fingers": {n: _finger_echo(f) for n, f in fingers.items()},
        "estimation": {
            "trials": args.trials,
            "theta0_deg": args.theta0_deg,
            "duration_s": args.duration_s,
            "sample_rate_hz": args.sample_rate_hz,
            "noise_sd_deg": args.noise_sd_deg,
            "cutoff_hz": args.cutoff_hz,
            "filter_order": args.filter_order,
            "prominence_frac": args.prominence_frac,
            "mode": "traces" if args.traces else "synthetic",
        },
    }
    report = build_report("estimate", config_echo, seed, results, checksums)
    lines = [f"prbm-ldm estimate ({'trace files' if args.traces else 'synthetic'})",
             ""]
    lines += format_table(
        ["finger", "k", "k sd", "b", "b sd", "trials", "failed"], rows)
    write_report(out_dir, report, lines)
    print("\n".join(lines))
    print(f"report written to {out_dir / 'report.json'}")
    return 0


# ---------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    fingers, cfg_seed, cfg_out = _select(args)
    out_dir = _resolve_out(args, cfg_out)
    seed = _resolve_seed(args, cfg_seed)
    seed_root = np.random.SeedSequence(seed)
    finger_seeds = seed_root.spawn(len(fingers))

    results: dict = {"scenario": args.scenario, "fingers": {}}
    lines = [f"prbm-ldm simulate {args.scenario}", ""]

    for idx, (name, finger) in enumerate(fingers.items()):
        plant = finger.plant
        extra: dict[str, Trace] = {}
        params: dict = {}

        if args.scenario == "free-decay":
            sim = run_free_decay(
                plant, math.radians(args.theta0_deg), args.duration_s,
                output_rate_hz=args.sample_rate_hz,
                noise_sd_rad=math.radians(args.noise_sd_deg),
                seed=finger_seeds[idx])
            params = {"theta0_deg": args.theta0_deg,
                      "duration_s": args.duration_s,
                      "noise_sd_deg": args.noise_sd_deg}
        elif args.scenario == "ramp":
            n = int(round(args.duration_s * args.sample_rate_hz)) + 1
            command = Trace(
                args.sample_rate_hz,
                np.linspace(args.pressure_start_kpa * 1e3,
                            args.pressure_end_kpa * 1e3, n),
                TraceUnit.PRESSURE_PA)
            sim = run_pressure_profile(plant, command)
            extra["pressure_command"] = command
            params = {"duration_s": args.duration_s,
                      "pressure_start_kpa": args.pressure_start_kpa,
                      "pressure_end_kpa": args.pressure_end_kpa}
        else:  # hold-force
            stop = math.radians(args.contact_deg)
            axis = tip_normal(stop)
            hold = pressure_for_force(
                finger.coefficients, finger.geometry, stop,
                TipForce(args.force_n * axis[0], args.force_n * axis[1]))
            lo, hi = plant.pressure_limits_pa
            hold_clamped = min(max(hold, lo), hi)
            sim, contact = run_rigid_stop_hold(
                plant, stop, hold_clamped, args.duration_s,
                output_rate_hz=args.sample_rate_hz)
            extra["contact_force"] = contact
            params = {"contact_deg": args.contact_deg,
                      "force_n": args.force_n,
                      "hold_pressure_pa": hold_clamped,
                      "pressure_saturated": hold > hi,
                      "duration_s": args.duration_s}

        channels = dict(sim.channels(), **extra)
        checksums = _write_channels(out_dir / name, channels)
        manifest = build_report(
            f"simulate {args.scenario}",
            {"finger": _finger_echo(finger), "scenario": params},
            seed, {"channel_sha256": checksums})
        write_report(out_dir / name, manifest,
                     [f"{name} {args.scenario}"]
                     + [f"  {k}: {v}" for k, v in sorted(checksums.items())])
        results["fingers"][name] = {"params": params,
                                    "channel_sha256": checksums}
        lines.append(f"{name}: {len(channels)} channels -> {out_dir / name}")

    config_echo = {"fingers": {n: _finger_echo(f) for n, f in fingers.items()}}
    report = build_report(f"simulate {args.scenario}", config_echo, seed,
                          results)
    write_report(out_dir, report, lines)
    print("\n".join(lines))
    print(f"report written to {out_dir / 'report.json'}")
    return 0


# ------------------------------------------------------------------- track

def cmd_track(args) -> int:
    fingers, cfg_seed, cfg_out = _select(args)
    out_dir = _resolve_out(args, cfg_out)
    seed = _resolve_seed(args, cfg_seed)
    feedforward = args.controller == "prbm-ldm"

    results: dict = {"controller": args.controller, "fingers": {}}
    rows = []
    for name, finger in fingers.items():
        plant = finger.plant
        if args.perturb_stiffness_pct:
            scale = 1.0 + args.perturb_stiffness_pct / 100.0
            perturbed = replace(finger.coefficients,
                                stiffness_k=finger.coefficients.stiffness_k
                                * scale)
            plant = replace(plant, coefficients=perturbed)
        spec = ReferenceSpec(
            kind=args.kind, offset_rad=math.radians(args.offset_deg),
            amplitude_rad=math.radians(args.amplitude_deg),
            period_s=args.period_s, duration_s=args.duration_s)
        run = run_position_tracking(
            plant, finger.coefficients, finger.position_gains, spec,
            feedforward=feedforward,
            noise_sd_rad=math.radians(args.noise_sd_deg), seed=seed)
        channels = {
            "reference": run.reference,
            "measured": run.measured,
            "error": run.report.error,
            "command": run.command,
            "pressure_applied": run.pressure_applied,
        }
        checksums = _write_channels(out_dir / name, channels)
        rmse_deg = math.degrees(run.report.rmse_rad)
        max_deg = math.degrees(run.report.max_error_rad)
        results["fingers"][name] = {
            "rmse_deg": rmse_deg,
            "max_error_deg": max_deg,
            "skip_samples": run.report.skip_samples,
            "perturb_stiffness_pct": args.perturb_stiffness_pct,
            "channel_sha256": checksums,
        }
        rows.append([name, args.controller, f"{rmse_deg:.3f}",
                     f"{max_deg:.3f}", f"{args.perturb_stiffness_pct:+.1f}%"])

    config_echo = {
        "fingers": {n: _finger_echo(f) for n, f in fingers.items()},
        "reference": {"kind": args.kind, "offset_deg": args.offset_deg,
                      "amplitude_deg": args.amplitude_deg,
                      "period_s": args.period_s,
                      "duration_s": args.duration_s},
        "noise_sd_deg": args.noise_sd_deg,
    }
    report = build_report("track", config_echo, seed, results)
    lines = ["prbm-ldm track", ""]
    lines += format_table(
        ["finger", "controller", "rmse deg", "max deg", "k perturb"], rows)
    write_report(out_dir, report, lines)
    print("\n".join(lines))
    print(f"report written to {out_dir / 'report.json'}")
    return 0


# ------------------------------------------------------------------- force

def cmd_force(args) -> int:
    fingers, cfg_seed, cfg_out = _select(args)
    out_dir = _resolve_out(args, cfg_out)
    seed = _resolve_seed(args, cfg_seed)

    results: dict = {"fingers": {}}
    rows = []
    for name, finger in fingers.items():
        run = run_force_tracking(
            finger.plant, finger.coefficients, finger.force_gains,
            args.force_n, math.radians(args.contact_deg), args.duration_s)
        channels = {
            "contact_force": run.contact,
            "estimated_force": run.estimated,
            "theta": run.theta,
            "command": run.command,
            "pressure_applied": run.pressure_applied,
        }
        checksums = _write_channels(out_dir / name, channels)
        rep = run.report
        results["fingers"][name] = {
            "force_ref_n": args.force_n,
            "contact_deg": args.contact_deg,
            "settled": rep.settled,
            "settling_time_s": rep.settling_time_s,
            "steady_state_error_n": rep.steady_state_error_n,
            "saturation_limited": rep.saturation_limited,
            "force_ceiling_n": rep.force_ceiling_n,
            "channel_sha256": checksums,
        }
        rows.append([
            name, f"{args.force_n:.3f}",
            "yes" if rep.settled else "no",
            "-" if rep.settling_time_s is None else f"{rep.settling_time_s:.2f}",
            f"{rep.steady_state_error_n:+.4f}",
            "SATURATED" if rep.saturation_limited else "ok",
        ])

    config_echo = {
        "fingers": {n: _finger_echo(f) for n, f in fingers.items()},
        "force_n": args.force_n, "contact_deg": args.contact_deg,
        "duration_s": args.duration_s,
    }
    report = build_report("force", config_echo, seed, results)
    lines = ["prbm-ldm force", ""]
    lines += format_table(
        ["finger", "f_ref N", "settled", "t_settle s", "steady err N",
         "actuator"], rows)
    write_report(out_dir, report, lines)
    print("\n".join(lines))
    print(f"report written to {out_dir / 'report.json'}")
    return 0


# --------------------------------------------------------------- calibrate

def cmd_calibrate(args) -> int:
    out_dir = _resolve_out(args, None)
    seed = _resolve_seed(args, None)
    raw = read_trace_csv(args.raw)
    reference = read_trace_csv(args.reference)
    fit = calibrate_linear(raw, reference)
    checksums = {str(args.raw): sha256_of_file(args.raw),
                 str(args.reference): sha256_of_file(args.reference)}
    results = {
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "n_samples": len(raw),
        "raw_unit": raw.unit.value,
        "reference_unit": reference.unit.value,
    }
    report = build_report("calibrate", {"raw": str(args.raw),
                                        "reference": str(args.reference)},
                          seed, results, checksums)
    lines = [
        "prbm-ldm calibrate",
        "",
        f"slope      {fit.slope:.9g} {reference.unit.value}/{raw.unit.value}",
        f"intercept  {fit.intercept:.9g} {reference.unit.value}",
        f"r_squared  {fit.r_squared:.9g}",
    ]
    write_report(out_dir, report, lines)
    print("\n".join(lines))
    print(f"report written to {out_dir / 'report.json'}")
    return 0


# -------------------------------------------------------------------- main

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prbm-ldm",
        description="Rigid-link finger model: identification, simulation, "
                    "and pressure control")
    parser.add_argument("--version", action="version",
                        version=f"prbm-ldm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="identify k and b from decay traces")
    _add_finger_selection(p)
    p.add_argument("--traces", nargs="+", metavar="CSV",
                   help="recorded decay trace files (default: synthetic)")
    p.add_argument("--synthetic", action="store_true",
                   help="force synthetic traces (the default when no files "
                   "are given)")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--theta0-deg", type=float, default=90.0)
    p.add_argument("--duration-s", type=float, default=6.0)
    p.add_argument("--sample-rate-hz", type=float, default=100.0)
    p.add_argument("--noise-sd-deg", type=float, default=0.5)
    p.add_argument("--cutoff-hz", type=float, default=10.0)
    p.add_argument("--filter-order", type=int, default=2)
    p.add_argument("--prominence-frac", type=float, default=0.10)
    _add_common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="open-loop plant scenarios")
    p.add_argument("--scenario", required=True,
                   choices=("free-decay", "ramp", "hold-force"))
    _add_finger_selection(p)
    p.add_argument("--theta0-deg", type=float, default=90.0)
    p.add_argument("--duration-s", type=float, default=None)
    p.add_argument("--sample-rate-hz", type=float, default=100.0)
    p.add_argument("--noise-sd-deg", type=float, default=0.0)
    p.add_argument("--pressure-start-kpa", type=float, default=0.0)
    p.add_argument("--pressure-end-kpa", type=float, default=200.0)
    p.add_argument("--force-n", type=float, default=1.0)
    p.add_argument("--contact-deg", type=float, default=90.0)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("track", help="closed-loop angle tracking")
    p.add_argument("--controller", choices=("prbm-ldm", "pid"),
                   default="prbm-ldm",
                   help="prbm-ldm = model feedforward plus PID; pid = bare "
                   "PID with the same gains")
    _add_finger_selection(p)
    p.add_argument("--kind", choices=("sine", "step", "hold"), default="sine")
    p.add_argument("--offset-deg", type=float, default=45.0)
    p.add_argument("--amplitude-deg", type=float, default=45.0)
    p.add_argument("--period-s", type=float, default=0.75)
    p.add_argument("--duration-s", type=float, default=3.0)
    p.add_argument("--perturb-stiffness-pct", type=float, default=0.0,
                   help="scale the simulated plant stiffness by this "
                   "percentage while the controller keeps the nominal model")
    p.add_argument("--noise-sd-deg", type=float, default=0.0)
    _add_common(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("force", help="closed-loop force against a stop")
    _add_finger_selection(p)
    p.add_argument("--force-n", type=float, default=1.0)
    p.add_argument("--contact-deg", type=float, default=90.0)
    p.add_argument("--duration-s", type=float, default=4.0)
    _add_common(p)
    p.set_defaults(func=cmd_force)

    p = sub.add_parser("calibrate", help="linear sensor calibration")
    p.add_argument("--raw", required=True, metavar="CSV",
                   help="raw sensor trace (for example voltage_mV)")
    p.add_argument("--reference", required=True, metavar="CSV",
                   help="reference trace in the target unit")
    _add_common(p)
    p.set_defaults(func=cmd_calibrate)
    return parser


_EXIT_CODES: tuple[tuple[type, int], ...] = (
    (ConfigError, 2),
    (ValidationError, 2),
    (ParameterError, 2),
    (TraceFileError, 3),
    (EstimationError, 4),
    (InstabilityError, 5),
    (DivergenceError, 5),
)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate" and args.duration_s is None:
        args.duration_s = {"free-decay": 6.0, "ramp": 60.0,
                           "hold-force": 4.0}[args.scenario]
    try:
        return args.func(args)
    except PrbmLdmError as exc:
        for err_type, code in _EXIT_CODES:
            if isinstance(exc, err_type):
                print(f"error: {exc}", file=sys.stderr)
                return code
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
