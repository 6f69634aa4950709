"""Sensor models: geometric exactness, noise statistics, scheduling."""

import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from flapsim.dynamics import VehicleParams, VehicleState, accel_world
from flapsim.environment import flat_terrain, mission_course
from flapsim.sensors import (NoiseConfig, SensorSchedule, SensorSuite,
                             flow_quality, sample_flow, sample_imu,
                             sample_tof)

QUIET = NoiseConfig()          # all densities zero
DT_FLOW = 1.0 / 120.0


def tilted_state(roll, pitch, yaw=0.0, **kw):
    q = Rotation.from_euler("ZYX", [yaw, pitch, roll]).as_quat()
    return VehicleState(qw=q[3], qx=q[0], qy=q[1], qz=q[2], **kw)


# ------------------------------------------------------------------ #
# zero-noise exactness


def test_quiet_gyro_equals_body_rates():
    s = VehicleState(pz=0.1, wx=0.3, wy=-0.2, wz=0.1)
    imu = sample_imu(s, (0.0, 0.0, 0.0), QUIET, 0.0)
    assert imu.gyro == pytest.approx((0.3, -0.2, 0.1), abs=1e-15)


def test_quiet_accel_hover_reads_plus_g():
    p = VehicleParams()
    s = VehicleState(pz=0.1)
    aw = accel_world(s, p.weight, p)
    imu = sample_imu(s, aw, QUIET, 0.0)
    assert imu.accel[0] == pytest.approx(0.0, abs=1e-12)
    assert imu.accel[1] == pytest.approx(0.0, abs=1e-12)
    assert imu.accel[2] == pytest.approx(9.81, abs=1e-12)


def test_quiet_accel_tilted_specific_force():
    """Specific force is Rᵀ(a + g e3) exactly."""
    p = VehicleParams()
    s = tilted_state(0.1, -0.2, 0.3, pz=0.2, vx=0.1, vy=-0.05, vz=0.02)
    F = 1.2 * p.weight
    aw = accel_world(s, F, p)
    imu = sample_imu(s, aw, QUIET, 0.0)
    R = Rotation.from_quat([s.qx, s.qy, s.qz, s.qw]).as_matrix()
    want = R.T @ (np.array(aw) + np.array([0.0, 0.0, 9.81]))
    assert np.allclose(imu.accel, want, atol=1e-12)
    # thrust acts along body z: lateral body axes see only drag
    assert abs(want[2] - F / p.mass
               + (R.T @ np.array([p.linear_drag[0] * s.vx,
                                  p.linear_drag[1] * s.vy,
                                  p.linear_drag[2] * s.vz]))[2]
               / p.mass) < 1e-12


def test_quiet_tof_level_equals_height():
    s = VehicleState(pz=0.25)
    tof = sample_tof(s, flat_terrain(), QUIET, 0.0)
    assert tof.valid
    assert tof.distance == pytest.approx(0.25, abs=1e-12)


def test_quiet_tof_tilted_slant_range():
    th = math.radians(20.0)
    s = tilted_state(0.0, th, pz=0.25)
    tof = sample_tof(s, flat_terrain(), QUIET, 0.0)
    assert tof.valid
    assert tof.distance == pytest.approx(0.25 / math.cos(th), abs=1e-9)


def test_tof_invalid_beyond_range_and_tilt():
    s = VehicleState(pz=0.7)
    assert not sample_tof(s, flat_terrain(), QUIET, 0.0).valid
    s2 = tilted_state(0.0, math.radians(50.0), pz=0.2)
    assert not sample_tof(s2, flat_terrain(), QUIET, 0.0).valid
    s3 = tilted_state(0.0, math.radians(44.0), pz=0.2)
    assert sample_tof(s3, flat_terrain(), QUIET, 0.0).valid


def test_tof_over_obstacle_reads_local_clearance():
    terr = mission_course()
    s = VehicleState(px=0.35, pz=0.16)   # directly over the bump peak
    tof = sample_tof(s, terr, QUIET, 0.0)
    assert tof.distance == pytest.approx(0.16 - 0.06, abs=1e-9)


def test_quiet_flow_pinhole_projection():
    """o = f·Δt·(v_b/h ∓ ω) per axis, from instantaneous state."""
    s = VehicleState(pz=0.10, vx=0.2, vy=-0.1, wx=0.4, wy=-0.3)
    sample, carry = sample_flow(s, flat_terrain(), QUIET, 0.0, DT_FLOW)
    f = QUIET.flow_focal_scale
    want_x = f * DT_FLOW * (0.2 / 0.10 - (-0.3))
    want_y = f * DT_FLOW * (-0.1 / 0.10 + 0.4)
    assert sample.flow[0] == pytest.approx(want_x, abs=1e-12)
    assert sample.flow[1] == pytest.approx(want_y, abs=1e-12)
    assert carry == (0.0, 0.0)


def test_pure_pitch_rate_flow_is_rotation_term_only():
    """Rotation about y at 1 rad/s, zero velocity: the x-axis flow is
    the derotation term focal*dt*1 and the velocity share is zero."""
    s = VehicleState(pz=0.10, wy=1.0)
    sample, _ = sample_flow(s, flat_terrain(), QUIET, 0.0, DT_FLOW)
    f = QUIET.flow_focal_scale
    assert abs(sample.flow[0]) == pytest.approx(f * DT_FLOW * 1.0,
                                                abs=1e-12)
    assert sample.flow[1] == 0.0
    # and about x: only the y axis responds
    s2 = VehicleState(pz=0.10, wx=1.0)
    sample2, _ = sample_flow(s2, flat_terrain(), QUIET, 0.0, DT_FLOW)
    assert abs(sample2.flow[1]) == pytest.approx(f * DT_FLOW * 1.0,
                                                 abs=1e-12)
    assert sample2.flow[0] == 0.0


def test_flow_uses_height_above_terrain():
    terr = mission_course()
    s = VehicleState(px=0.35, pz=0.16, vx=0.1)    # 0.10 m over the bump
    sample, _ = sample_flow(s, terr, QUIET, 0.0, DT_FLOW)
    f = QUIET.flow_focal_scale
    assert sample.flow[0] == pytest.approx(f * DT_FLOW * 0.1 / 0.10,
                                           abs=1e-12)


# ------------------------------------------------------------------ #
# quality model


def test_flow_quality_degrades_with_height_and_speed():
    cfg = QUIET
    q_low = flow_quality(0.05, 0.0, cfg)
    q_high = flow_quality(0.5, 0.0, cfg)
    q_fast = flow_quality(0.05, 2.0, cfg)
    assert q_low > q_high > 0.0
    assert q_low > q_fast > 0.0
    assert flow_quality(0.004, 0.0, cfg) == 0.0      # below min height
    assert flow_quality(0.05, 50.0, cfg) == 0.0      # absurd speed
    assert flow_quality(5.0, 0.0, cfg) == 0.0        # too high


# ------------------------------------------------------------------ #
# noise statistics


def test_white_noise_magnitude_is_density_times_sqrt_rate():
    cfg = NoiseConfig(gyro_noise_density=1.5e-4, accel_noise_density=2.5e-3,
                      rng_seed=11)
    suite = SensorSuite(cfg, flat_terrain())
    s = VehicleState(pz=0.1)
    p = VehicleParams()
    aw = accel_world(s, p.weight, p)
    gx, az = [], []
    for k in range(20000):
        frame = suite.poll(s, aw, 0.0, k / 480.0)
        gx.append(frame.imu.gyro[0])
        az.append(frame.imu.accel[2] - 9.81)
    want_g = 1.5e-4 * math.sqrt(480.0)
    want_a = 2.5e-3 * math.sqrt(480.0)
    assert np.std(gx) == pytest.approx(want_g, rel=0.03)
    assert np.std(az) == pytest.approx(want_a, rel=0.03)


def test_allan_deviation_at_one_second_equals_density():
    """Cluster the white stream into 1-s averages; the Allan deviation
    of white noise at tau is density/sqrt(tau)."""
    density = 2.0e-4
    cfg = NoiseConfig(gyro_noise_density=density, rng_seed=5)
    suite = SensorSuite(cfg, flat_terrain())
    s = VehicleState(pz=0.1)
    p = VehicleParams()
    aw = accel_world(s, p.weight, p)
    rate = 480
    n_sec = 400
    samples = [suite.poll(s, aw, 0.0, k / 480.0).imu.gyro[0]
               for k in range(rate * n_sec)]
    means = np.array(samples).reshape(n_sec, rate).mean(axis=1)
    avar = 0.5 * np.mean(np.diff(means) ** 2)
    adev = math.sqrt(avar)
    assert adev == pytest.approx(density, rel=0.10)


def test_vibration_tone_aliases_to_150hz():
    """330 Hz sampled at 480 Hz lands at |330-480| = 150 Hz."""
    cfg = NoiseConfig(vibration_amplitude=1.0)
    s = VehicleState(pz=0.1)
    p = VehicleParams()
    aw = accel_world(s, p.weight, p)
    n = 4800
    ax = np.array([sample_imu(s, aw, cfg, k / 480.0,
                              thrust_frac=0.5).accel[0] for k in range(n)])
    spec = np.abs(np.fft.rfft(ax)) / (n / 2)
    freqs = np.fft.rfftfreq(n, 1.0 / 480.0)
    peak = freqs[np.argmax(spec[1:]) + 1]
    assert peak == pytest.approx(150.0, abs=0.2)
    assert np.max(spec[1:]) == pytest.approx(1.0 * 0.5, rel=0.01)
    # gyro pitch axis carries a tenth of the amplitude
    gy = np.array([sample_imu(s, aw, cfg, k / 480.0,
                              thrust_frac=0.5).gyro[1] for k in range(n)])
    gspec = np.abs(np.fft.rfft(gy)) / (n / 2)
    assert np.max(gspec[1:]) == pytest.approx(0.1 * 0.5, rel=0.01)


def test_vibration_scales_with_thrust_fraction():
    cfg = NoiseConfig(vibration_amplitude=1.0)
    s = VehicleState(pz=0.1)
    p = VehicleParams()
    aw = accel_world(s, p.weight, p)
    t = 1.0 / 960.0   # sin(2*pi*330*t) != 0
    lo = sample_imu(s, aw, cfg, t, thrust_frac=0.2).accel[0]
    hi = sample_imu(s, aw, cfg, t, thrust_frac=0.8).accel[0]
    assert hi == pytest.approx(4.0 * lo, rel=1e-9)


def test_tof_noise_std():
    cfg = NoiseConfig(tof_noise_std=3e-3, rng_seed=7)
    suite = SensorSuite(cfg, flat_terrain(), tof_rate=480.0)
    s = VehicleState(pz=0.2)
    p = VehicleParams()
    aw = accel_world(s, p.weight, p)
    ds = [suite.poll(s, aw, 0.0, k / 480.0).tof.distance
          for k in range(20000)]
    assert np.mean(ds) == pytest.approx(0.2, abs=1e-4)
    assert np.std(ds) == pytest.approx(3e-3, rel=0.05)


def test_flow_pixel_noise_grows_with_height():
    base = 0.3
    cfg = NoiseConfig(flow_noise_std=base, rng_seed=9)
    rng = np.random.default_rng(3)
    outs_low, outs_high = [], []
    for _ in range(4000):
        s_low = VehicleState(pz=0.10)
        s_high = VehicleState(pz=0.30)
        lo, _ = sample_flow(s_low, flat_terrain(), cfg, 0.0, DT_FLOW,
                            rng=rng)
        hi, _ = sample_flow(s_high, flat_terrain(), cfg, 0.0, DT_FLOW,
                            rng=rng)
        outs_low.append(lo.flow[0])
        outs_high.append(hi.flow[0])
    want_low = base * (1.0 + 0.10 / 0.10)
    want_high = base * (1.0 + 0.30 / 0.10)
    assert np.std(outs_low) == pytest.approx(want_low, rel=0.08)
    assert np.std(outs_high) == pytest.approx(want_high, rel=0.08)


def test_flow_quantization_carries_subpixel_remainder():
    cfg = NoiseConfig(flow_quantize=True)
    s = VehicleState(pz=0.10, vx=0.02)   # 0.64 px per frame ideal
    carry = (0.0, 0.0)
    total_q = 0.0
    n = 240
    for k in range(n):
        sample, carry = sample_flow(s, flat_terrain(), cfg, k * DT_FLOW,
                                    DT_FLOW, carry=carry)
        assert sample.flow[0] == round(sample.flow[0])   # whole pixels
        total_q += sample.flow[0]
    f = cfg.flow_focal_scale
    ideal_total = f * DT_FLOW * (0.02 / 0.10) * n
    # accumulated quantized flow never loses displacement
    assert abs(total_q - ideal_total) <= 0.5 + 1e-9


# ------------------------------------------------------------------ #
# scheduling


def brute_force_due(rate, tick, base=480.0):
    t = tick / base
    # sample n fires at n/rate; due when its time has arrived
    n_before = math.floor(t * rate + 1e-9)
    return abs(n_before / rate - t) < 1e-9 or tick == 0


def test_schedule_counting_oracle():
    sched = SensorSchedule({"imu": 480.0, "tof": 240.0, "flow": 120.0})
    counts = {"imu": 0, "tof": 0, "flow": 0}
    n_ticks = 4800
    for k in range(n_ticks):
        due = sched.poll(k / 480.0)
        for name in due:
            counts[name] += 1
    # 10 s: exactly rate*T samples per stream, t=0 included
    assert counts == {"imu": 4800, "tof": 2400, "flow": 1200}


def test_schedule_never_drops_or_duplicates():
    sched = SensorSchedule({"slow": 7.0})   # awkward non-divisor rate
    fired = []
    for k in range(4800):
        if "slow" in sched.poll(k / 480.0):
            fired.append(k)
    # one per due point, count = ceil(T*rate) within 1
    assert len(fired) == 70
    assert len(set(fired)) == len(fired)
    gaps = np.diff(fired)
    assert set(gaps.tolist()) <= {68, 69}   # 480/7 = 68.57


def test_all_sensors_due_at_t0():
    sched = SensorSchedule({"imu": 480.0, "tof": 240.0, "flow": 120.0})
    assert set(sched.poll(0.0)) == {"imu", "tof", "flow"}


# ------------------------------------------------------------------ #
# reproducibility


def test_same_seed_same_stream():
    cfg = NoiseConfig(gyro_noise_density=1e-4, accel_noise_density=1e-3,
                      tof_noise_std=1e-3, flow_noise_std=0.2, rng_seed=21)
    p = VehicleParams()
    s = VehicleState(pz=0.1, vx=0.05)
    aw = accel_world(s, p.weight, p)

    def stream():
        suite = SensorSuite(cfg, flat_terrain())
        out = []
        for k in range(480):
            f = suite.poll(s, aw, 0.5, k / 480.0)
            out.append((f.imu.gyro, f.imu.accel,
                        None if f.tof is None else f.tof.distance,
                        None if f.flow is None else f.flow.flow))
        return out

    assert stream() == stream()


def test_different_seed_different_stream():
    p = VehicleParams()
    s = VehicleState(pz=0.1)
    aw = accel_world(s, p.weight, p)
    a = SensorSuite(NoiseConfig(gyro_noise_density=1e-4, rng_seed=1),
                    flat_terrain()).poll(s, aw, 0.0, 0.0)
    b = SensorSuite(NoiseConfig(gyro_noise_density=1e-4, rng_seed=2),
                    flat_terrain()).poll(s, aw, 0.0, 0.0)
    assert a.imu.gyro != b.imu.gyro


def test_calibration_recovers_configured_bias():
    cfg = NoiseConfig(gyro_noise_density=1.5e-4,
                      gyro_bias=(0.008, -0.005, 0.004), rng_seed=13)
    suite = SensorSuite(cfg, flat_terrain())
    b = suite.calibrate_gyro_bias(1.0)
    sigma_mean = 1.5e-4 * math.sqrt(480.0) / math.sqrt(480.0)
    assert b[0] == pytest.approx(0.008, abs=5 * sigma_mean)
    assert b[1] == pytest.approx(-0.005, abs=5 * sigma_mean)
    assert b[2] == pytest.approx(0.004, abs=5 * sigma_mean)


def test_validate_rejects_negative_noise():
    with pytest.raises(ValueError):
        NoiseConfig(gyro_noise_density=-1.0).validate()
    with pytest.raises(ValueError):
        NoiseConfig(tof_max_range=-0.1).validate()
