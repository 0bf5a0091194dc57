import json
import math

import numpy as np
import pytest

from prbm_ldm import (
    ConfigError,
    FINGER_NAMES,
    Trace,
    TraceFileError,
    TraceUnit,
    builtin_finger,
    damping_ratio,
    load_experiment_config,
    load_finger_config,
    natural_frequency,
    read_trace_csv,
    write_trace_csv,
)
from prbm_ldm.report import (
    build_report,
    format_table,
    sha256_of_file,
    write_report,
)


class TestTraceCsv:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        tr = Trace(100.0, rng.uniform(-1, 2, 50), TraceUnit.ANGLE_RAD)
        path = tmp_path / "angle.csv"
        write_trace_csv(path, tr)
        back = read_trace_csv(path)
        assert back.sample_rate_hz == 100.0
        assert back.unit == TraceUnit.ANGLE_RAD
        # values are written with nine decimals
        assert np.max(np.abs(back.values - tr.values)) < 1e-9

    @pytest.mark.parametrize("fs", [50.0, 100.0, 250.0, 1000.0])
    def test_sample_rate_survives_exactly(self, tmp_path, fs):
        tr = Trace(fs, np.linspace(0, 1, 20), TraceUnit.PRESSURE_PA)
        path = tmp_path / "p.csv"
        write_trace_csv(path, tr)
        assert read_trace_csv(path).sample_rate_hz == fs

    def test_header_names_unit(self, tmp_path):
        path = tmp_path / "v.csv"
        write_trace_csv(path, Trace(10.0, np.zeros(3), TraceUnit.VOLTAGE_MV))
        first = path.read_text().splitlines()[0]
        assert first == "t_s,voltage_mV"

    def test_missing_file(self, tmp_path):
        with pytest.raises(TraceFileError) as err:
            read_trace_csv(tmp_path / "nope.csv")
        assert "nope.csv" in str(err.value)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(TraceFileError):
            read_trace_csv(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,angle\n0.0,1.0\n0.01,0.9\n")
        with pytest.raises(TraceFileError) as err:
            read_trace_csv(path)
        assert "t_s" in str(err.value)

    def test_unknown_unit(self, tmp_path):
        path = tmp_path / "u.csv"
        path.write_text("t_s,furlongs\n0.0,1.0\n0.01,0.9\n")
        with pytest.raises(TraceFileError) as err:
            read_trace_csv(path)
        assert "furlongs" in str(err.value)

    def test_non_numeric_row_is_located(self, tmp_path):
        path = tmp_path / "n.csv"
        path.write_text("t_s,angle_rad\n0.0,1.0\n0.01,oops\n0.02,0.8\n")
        with pytest.raises(TraceFileError) as err:
            read_trace_csv(path)
        assert err.value.row == 3

    def test_non_finite_rejected(self, tmp_path):
        path = tmp_path / "inf.csv"
        path.write_text("t_s,angle_rad\n0.0,1.0\n0.01,inf\n")
        with pytest.raises(TraceFileError):
            read_trace_csv(path)

    def test_single_row_rejected(self, tmp_path):
        path = tmp_path / "one.csv"
        path.write_text("t_s,angle_rad\n0.0,1.0\n")
        with pytest.raises(TraceFileError) as err:
            read_trace_csv(path)
        assert "2 data rows" in str(err.value)

    def test_non_increasing_times_rejected(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("t_s,angle_rad\n0.0,1.0\n0.0,0.9\n")
        with pytest.raises(TraceFileError):
            read_trace_csv(path)

    def test_jittered_grid_rejected(self, tmp_path):
        path = tmp_path / "j.csv"
        path.write_text("t_s,angle_rad\n0.0,1.0\n0.01,0.9\n0.025,0.8\n")
        with pytest.raises(TraceFileError) as err:
            read_trace_csv(path)
        assert "grid" in str(err.value)


class TestFingerConfigs:
    @pytest.mark.parametrize("name", FINGER_NAMES)
    def test_builtin_parses_and_is_plausible(self, name):
        finger = builtin_finger(name)
        assert finger.name == name
        c = finger.coefficients
        assert 0.4 < c.stiffness_k < 0.8
        assert 0.0005 < c.damping_b < 0.005
        # every packaged finger is underdamped and resolvable at 1 kHz
        assert damping_ratio(c) < 0.15
        assert natural_frequency(c) * finger.plant.dt_s < 0.05
        assert finger.position_gains.loop_rate_hz == 100.0

    def test_unknown_builtin(self):
        with pytest.raises(ConfigError):
            builtin_finger("pinky")

    def test_file_round_trip(self, tmp_path):
        text = """
[finger]
name = index

[geometry]
mass_kg = 0.1
length_m = 0.1
gamma = 0.8
width_e_m = 0.02
wall_a_m = 0.003
chamber_b_m = 0.01
arm_larm_m = 0.0

[coefficients]
stiffness_k = 0.5
damping_b = 0.002
"""
        path = tmp_path / "f.ini"
        path.write_text(text)
        finger = load_finger_config(path)
        assert finger.geometry.gamma == 0.8
        assert finger.coefficients.stiffness_k == 0.5
        # coefficients derived from geometry when not overridden
        assert finger.coefficients.inertia_A == pytest.approx(
            (7 / 12) * 0.1 * 0.8 ** 3 * 0.1 ** 2, rel=1e-12)

    def test_coefficient_overrides(self, tmp_path):
        text = """
[finger]
name = thumb

[geometry]
mass_kg = 0.1
length_m = 0.1
gamma = 0.8
width_e_m = 0.02
wall_a_m = 0.003
chamber_b_m = 0.01

[coefficients]
stiffness_k = 0.5
damping_b = 0.002
inertia_A = 4.0e-4
moment_N = 8.0e-6
"""
        path = tmp_path / "f.ini"
        path.write_text(text)
        finger = load_finger_config(path)
        assert finger.coefficients.inertia_A == 4.0e-4
        assert finger.coefficients.moment_N == 8.0e-6

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("""
[finger]
name = index
colour = green

[geometry]
mass_kg = 0.1
length_m = 0.1
gamma = 0.8
width_e_m = 0.02
wall_a_m = 0.003
chamber_b_m = 0.01

[coefficients]
stiffness_k = 0.5
damping_b = 0.002
""")
        with pytest.raises(ConfigError) as err:
            load_finger_config(path)
        assert "colour" in str(err.value)

    def test_unknown_section_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("""
[finger]
name = index

[geometry]
mass_kg = 0.1
length_m = 0.1
gamma = 0.8
width_e_m = 0.02
wall_a_m = 0.003
chamber_b_m = 0.01

[coefficients]
stiffness_k = 0.5
damping_b = 0.002

[telemetry]
rate = 10
""")
        with pytest.raises(ConfigError) as err:
            load_finger_config(path)
        assert "telemetry" in str(err.value)

    def test_invalid_value_names_file_and_field(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("""
[finger]
name = index

[geometry]
mass_kg = 0.1
length_m = 0.1
gamma = 1.4
width_e_m = 0.02
wall_a_m = 0.003
chamber_b_m = 0.01

[coefficients]
stiffness_k = 0.5
damping_b = 0.002
""")
        with pytest.raises(ConfigError) as err:
            load_finger_config(path)
        msg = str(err.value)
        assert "bad.ini" in msg and "gamma" in msg

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_finger_config(tmp_path / "nope.ini")


class TestExperimentConfig:
    def test_builtin_and_relative_paths(self, tmp_path):
        finger_text = """
[finger]
name = ring

[geometry]
mass_kg = 0.1
length_m = 0.1
gamma = 0.8
width_e_m = 0.02
wall_a_m = 0.003
chamber_b_m = 0.01

[coefficients]
stiffness_k = 0.5
damping_b = 0.002
"""
        (tmp_path / "ring.ini").write_text(finger_text)
        (tmp_path / "exp.ini").write_text("""
[experiment]
seed = 17
out_dir = runs/exp1

[fingers]
index = builtin
ring = ring.ini
""")
        experiment = load_experiment_config(tmp_path / "exp.ini")
        assert experiment.seed == 17
        assert experiment.out_dir == "runs/exp1"
        assert list(experiment.fingers) == ["index", "ring"]
        assert experiment.fingers["ring"].geometry.gamma == 0.8

    def test_name_mismatch_rejected(self, tmp_path):
        (tmp_path / "f.ini").write_text("""
[finger]
name = middle

[geometry]
mass_kg = 0.1
length_m = 0.1
gamma = 0.8
width_e_m = 0.02
wall_a_m = 0.003
chamber_b_m = 0.01

[coefficients]
stiffness_k = 0.5
damping_b = 0.002
""")
        (tmp_path / "exp.ini").write_text("""
[fingers]
ring = f.ini
""")
        with pytest.raises(ConfigError):
            load_experiment_config(tmp_path / "exp.ini")

    def test_needs_at_least_one_finger(self, tmp_path):
        (tmp_path / "exp.ini").write_text("[experiment]\nseed = 3\n")
        with pytest.raises(ConfigError):
            load_experiment_config(tmp_path / "exp.ini")


class TestReport:
    def test_deterministic_bytes(self, tmp_path):
        report = build_report("estimate", {"finger": "index"}, 7,
                              {"stiffness_k": 0.57})
        p1, t1 = write_report(tmp_path / "a", report, ["line one"])
        p2, t2 = write_report(tmp_path / "b", report, ["line one"])
        assert p1.read_bytes() == p2.read_bytes()
        assert t1.read_bytes() == t2.read_bytes()

    def test_keys_and_echo(self):
        report = build_report("track", {"kind": "sine"}, None,
                              {"rmse": 0.1}, {"in.csv": "ab" * 32})
        assert set(report) == {"command", "version", "seed", "config",
                               "inputs_sha256", "results"}
        assert report["command"] == "track"
        assert report["seed"] is None
        assert report["config"] == {"kind": "sine"}

    def test_json_is_sorted_and_indented(self, tmp_path):
        report = build_report("x", {"b": 1, "a": 2}, 0, {})
        path, _ = write_report(tmp_path, report, [])
        text = path.read_text()
        assert text.index('"a"') < text.index('"b"')
        assert text.endswith("\n")
        json.loads(text)

    def test_sha256_matches_reference(self, tmp_path):
        path = tmp_path / "x.bin"
        path.write_bytes(b"abc")
        assert sha256_of_file(path) == (
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad")

    def test_format_table_aligns(self):
        lines = format_table(["name", "value"], [["a", "1.0"],
                                                 ["longer", "2.25"]])
        assert len({len(line) for line in lines}) == 1
        assert lines[0].startswith("name")
