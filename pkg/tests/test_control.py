import math
from dataclasses import replace

import numpy as np
import pytest

from prbm_ldm import (
    InstabilityError,
    ParameterError,
    PidGains,
    PidState,
    ReferenceSpec,
    TipForce,
    Trace,
    TraceUnit,
    ValidationError,
    evaluate_tracking,
    force_controller_step,
    generate_reference,
    pid_step,
    position_controller_step,
    pressure_for_angle,
    pressure_for_force,
    run_force_tracking,
    run_position_tracking,
    tip_normal,
)


@pytest.fixture
def gains():
    return PidGains(kp=100.0, ki=50.0, kd=2.0, integral_limit=0.5)


class TestPidStep:
    def test_deterministic_and_immutable(self, gains):
        state = PidState()
        out1, next1 = pid_step(gains, 0.3, state)
        out2, next2 = pid_step(gains, 0.3, state)
        assert out1 == out2
        assert next1 == next2
        assert state == PidState()

    def test_zero_error_is_fixed_point(self, gains):
        state = PidState()
        out, state = pid_step(gains, 0.0, state)
        assert out == 0.0
        assert state == PidState()

    def test_proportional_only_first_tick(self):
        g = PidGains(kp=7.0, ki=0.0, kd=0.0, integral_limit=1.0)
        out, _ = pid_step(g, 0.5, PidState())
        assert out == pytest.approx(3.5, rel=1e-12)

    def test_integral_accumulates_trapezoidally(self):
        g = PidGains(kp=0.0, ki=1.0, kd=0.0, integral_limit=100.0)
        state = PidState()
        # error ramps 0, 1, 2: trapezoid gives 0.5*(0+1)*dt + 0.5*(1+2)*dt
        for e in (0.0, 1.0, 2.0):
            out, state = pid_step(g, e, state)
        assert state.integral == pytest.approx(2.0 * g.dt_s, rel=1e-12)

    def test_integral_clamps_at_limit(self):
        g = PidGains(kp=0.0, ki=10.0, kd=0.0, integral_limit=0.05)
        state = PidState()
        for _ in range(200):
            out, state = pid_step(g, 1.0, state)
        assert state.integral == g.integral_limit
        assert out == pytest.approx(g.ki * g.integral_limit, rel=1e-12)
        # windup is bounded; the trapezoid needs two ticks of reversed
        # error before the integral moves off the clamp
        out, state = pid_step(g, -1.0, state)
        out, state = pid_step(g, -1.0, state)
        assert state.integral < g.integral_limit

    def test_derivative_filter_decay(self):
        g = PidGains(kp=0.0, ki=0.0, kd=1.0, integral_limit=1.0,
                     derivative_filter_hz=40.0)
        dt = g.dt_s
        alpha = dt / (dt + 1.0 / (2.0 * math.pi * 40.0))
        out1, state = pid_step(g, 1.0, PidState())
        assert out1 == pytest.approx(alpha / dt, rel=1e-12)
        assert out1 < 1.0 / dt
        # constant error afterwards: the filtered derivative relaxes
        out2, state = pid_step(g, 1.0, state)
        assert out2 == pytest.approx((1.0 - alpha) * out1, rel=1e-12)


class TestPositionController:
    def test_feedforward_fixed_point(self, coefficients, gains):
        ref = 0.9
        command, state = position_controller_step(
            coefficients, gains, ref, ref, PidState())
        assert command == pytest.approx(
            pressure_for_angle(coefficients, ref), rel=1e-12)
        assert state == PidState()

    def test_bare_pid_has_no_model_term(self, coefficients, gains):
        command, _ = position_controller_step(
            coefficients, gains, 0.9, 0.9, PidState(), feedforward=False)
        assert command == 0.0

    def test_command_respects_limits(self, coefficients):
        g = PidGains(kp=1e9, ki=0.0, kd=0.0, integral_limit=1.0)
        hi, _ = position_controller_step(coefficients, g, 1.0, 0.0,
                                         PidState())
        lo, _ = position_controller_step(coefficients, g, 0.0, 1.0,
                                         PidState())
        assert hi == 200e3
        assert lo == 0.0


class TestForceController:
    def test_feedforward_fixed_point(self, coefficients, geometry):
        g = PidGains(kp=1e3, ki=1e2, kd=0.0, integral_limit=0.25)
        theta = math.pi / 2
        u = tip_normal(theta)
        p_hold = pressure_for_force(coefficients, geometry, theta,
                                    TipForce(u[0], u[1]))
        command, state = force_controller_step(
            coefficients, geometry, g, 1.0, p_hold, theta, PidState())
        assert command == pytest.approx(p_hold, rel=1e-12)
        # only trig round-off should be left in the loop state
        assert abs(state.prev_error) < 1e-12

    def test_underpressure_raises_command(self, coefficients, geometry):
        g = PidGains(kp=1e3, ki=1e2, kd=0.0, integral_limit=0.25)
        theta = math.pi / 2
        u = tip_normal(theta)
        p_hold = pressure_for_force(coefficients, geometry, theta,
                                    TipForce(u[0], u[1]))
        command, _ = force_controller_step(
            coefficients, geometry, g, 1.0, 0.8 * p_hold, theta, PidState())
        assert command > p_hold


class TestReference:
    def test_sine_samples(self):
        spec = ReferenceSpec(kind="sine", offset_rad=0.5, amplitude_rad=0.2,
                             period_s=0.5, duration_s=1.0)
        tr = generate_reference(spec, 100.0)
        assert len(tr) == 100
        assert tr.values[0] == pytest.approx(0.5)
        assert tr.values[12] == pytest.approx(
            0.5 + 0.2 * math.sin(2 * math.pi * 0.12 / 0.5), rel=1e-12)

    def test_step_and_hold(self):
        step = generate_reference(
            ReferenceSpec(kind="step", offset_rad=0.1, amplitude_rad=0.4,
                          duration_s=0.5), 100.0)
        hold = generate_reference(
            ReferenceSpec(kind="hold", offset_rad=0.3, duration_s=0.5), 100.0)
        assert np.all(step.values == step.values[0])
        assert step.values[0] == pytest.approx(0.5, rel=1e-12)
        assert np.all(hold.values == 0.3)

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValidationError):
            ReferenceSpec(kind="sawtooth", offset_rad=0.0)

    def test_sine_needs_period(self):
        with pytest.raises(ValidationError):
            ReferenceSpec(kind="sine", offset_rad=0.0, amplitude_rad=0.1,
                          period_s=0.0)

    def test_too_short_rejected(self):
        spec = ReferenceSpec(kind="hold", offset_rad=0.1, duration_s=0.005)
        with pytest.raises(ParameterError):
            generate_reference(spec, 100.0)


class TestEvaluateTracking:
    def test_phase_shift_rmse_closed_form(self):
        # a pure 3-sample lag over whole periods has rmse
        # sqrt(2) * |sin(pi * lag / (fs * T))| for a unit-amplitude sine
        fs, period, lag = 100.0, 0.75, 3
        t = np.arange(300) / fs
        ref = Trace(fs, np.sin(2 * math.pi * t / period),
                    TraceUnit.ANGLE_RAD)
        meas = Trace(fs, np.sin(2 * math.pi * (t - lag / fs) / period),
                     TraceUnit.ANGLE_RAD)
        report = evaluate_tracking(ref, meas)
        expected = math.sqrt(2.0) * abs(math.sin(math.pi * lag
                                                 / (fs * period)))
        assert report.rmse_rad == pytest.approx(expected, rel=1e-9)
        assert report.max_error_rad >= report.rmse_rad

    def test_error_trace_keeps_all_samples(self):
        fs = 100.0
        ref = Trace(fs, np.zeros(50), TraceUnit.ANGLE_RAD)
        meas = Trace(fs, np.linspace(0, 1, 50), TraceUnit.ANGLE_RAD)
        report = evaluate_tracking(ref, meas, skip_samples=20)
        assert len(report.error) == 50
        assert report.skip_samples == 20
        # rmse covers only the tail beyond the skip
        tail = np.linspace(0, 1, 50)[20:]
        assert report.rmse_rad == pytest.approx(
            math.sqrt(np.mean(tail ** 2)), rel=1e-12)
        assert report.max_error_rad == pytest.approx(1.0, rel=1e-12)

    def test_length_mismatch_rejected(self):
        ref = Trace(100.0, np.zeros(50), TraceUnit.ANGLE_RAD)
        meas = Trace(100.0, np.zeros(51), TraceUnit.ANGLE_RAD)
        with pytest.raises(ParameterError):
            evaluate_tracking(ref, meas)


class TestPositionTracking:
    def test_feedforward_beats_bare_pid(self, index_finger):
        spec = ReferenceSpec(kind="sine", offset_rad=math.radians(45.0),
                             amplitude_rad=math.radians(45.0),
                             period_s=0.75, duration_s=3.0)
        ff = run_position_tracking(index_finger.plant,
                                   index_finger.coefficients,
                                   index_finger.position_gains, spec)
        bare = run_position_tracking(index_finger.plant,
                                     index_finger.coefficients,
                                     index_finger.position_gains, spec,
                                     feedforward=False)
        assert ff.report.rmse_rad < bare.report.rmse_rad
        assert math.degrees(ff.report.rmse_rad) < 5.0

    def test_commands_stay_within_limits(self, index_finger):
        spec = ReferenceSpec(kind="sine", offset_rad=math.radians(45.0),
                             amplitude_rad=math.radians(45.0),
                             period_s=0.75, duration_s=1.5)
        run = run_position_tracking(index_finger.plant,
                                    index_finger.coefficients,
                                    index_finger.position_gains, spec)
        lo, hi = index_finger.plant.pressure_limits_pa
        assert np.all(run.command.values >= lo)
        assert np.all(run.command.values <= hi)
        assert len(run.command) == len(run.measured)

    def test_noise_is_seeded(self, index_finger):
        spec = ReferenceSpec(kind="hold", offset_rad=0.6, duration_s=1.0)
        a = run_position_tracking(index_finger.plant,
                                  index_finger.coefficients,
                                  index_finger.position_gains, spec,
                                  noise_sd_rad=0.005, seed=11)
        b = run_position_tracking(index_finger.plant,
                                  index_finger.coefficients,
                                  index_finger.position_gains, spec,
                                  noise_sd_rad=0.005, seed=11)
        assert np.array_equal(a.measured.values, b.measured.values)
        assert a.report.rmse_rad == b.report.rmse_rad

    def test_instability_abort(self, index_finger):
        spec = ReferenceSpec(kind="step", offset_rad=0.0,
                             amplitude_rad=math.radians(60.0),
                             duration_s=2.0)
        with pytest.raises(InstabilityError) as err:
            run_position_tracking(index_finger.plant,
                                  index_finger.coefficients,
                                  index_finger.position_gains, spec,
                                  abort_theta_rad=0.3)
        assert abs(err.value.theta_rad) >= 0.3
        assert "gains" in str(err.value)

    def test_default_skip_covers_one_sine_period(self, index_finger):
        spec = ReferenceSpec(kind="sine", offset_rad=0.6,
                             amplitude_rad=0.2, period_s=0.5,
                             duration_s=2.0)
        run = run_position_tracking(index_finger.plant,
                                    index_finger.coefficients,
                                    index_finger.position_gains, spec)
        assert run.report.skip_samples == 50


class TestForceTracking:
    def test_settles_on_reference(self, index_finger):
        run = run_force_tracking(index_finger.plant,
                                 index_finger.coefficients,
                                 index_finger.force_gains, 1.0,
                                 math.pi / 2, 4.0)
        rep = run.report
        assert rep.settled
        assert rep.settling_time_s < 2.0
        assert abs(rep.steady_state_error_n) < 0.02
        assert not rep.saturation_limited
        assert run.contact.values[-1] == pytest.approx(1.0, abs=0.02)

    def test_saturation_flagged_for_unreachable_force(self, index_finger):
        run = run_force_tracking(index_finger.plant,
                                 index_finger.coefficients,
                                 index_finger.force_gains, 50.0,
                                 math.pi / 2, 2.0)
        rep = run.report
        assert rep.saturation_limited
        assert not rep.settled
        # the ceiling is the estimate at full supply pressure
        assert rep.force_ceiling_n == pytest.approx(19.25, rel=0.01)
        assert run.contact.values[-1] < 50.0

    def test_estimated_force_tracks_contact(self, index_finger):
        run = run_force_tracking(index_finger.plant,
                                 index_finger.coefficients,
                                 index_finger.force_gains, 1.5,
                                 1.1, 4.0)
        # with nominal coefficients the estimator and the constraint force
        # agree once settled
        assert run.estimated.values[-1] == pytest.approx(
            run.contact.values[-1], rel=0.02)


class TestGainValidation:
    def test_rejects_non_positive_integral_limit(self):
        with pytest.raises(ValidationError):
            PidGains(kp=1.0, ki=1.0, kd=0.0, integral_limit=0.0)

    def test_rejects_non_finite_gain(self):
        with pytest.raises(ValidationError):
            PidGains(kp=math.nan, ki=1.0, kd=0.0, integral_limit=1.0)

    def test_loop_dt(self):
        g = PidGains(kp=1.0, ki=1.0, kd=0.0, integral_limit=1.0,
                     loop_rate_hz=200.0)
        assert g.dt_s == pytest.approx(0.005, rel=1e-12)
