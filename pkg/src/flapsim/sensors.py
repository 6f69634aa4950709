"""Sensor emulation: IMU, downward time-of-flight ranger, optical flow.

Measurements are produced from ground truth by pure functions so tests
can drive them directly; `SensorSuite` wraps them with per-sensor
pseudorandom streams (all spawned from one master seed), the multi-rate
schedule, and the small amount of state real sensors carry (the flow
frame interval and the subpixel quantization remainder).

With a default `NoiseConfig` every output equals its geometric ideal:
all noise terms, biases, the vibration tone, and pixel quantization are
opt-in, which keeps the noise-free exactness contract trivially honest.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import quat

# flow quality shape constants: quality fades to zero as height
# approaches the far limit or lateral speed approaches the blur limit
_QUALITY_H_LIMIT = 0.8    # m
_QUALITY_SPEED_LIMIT = 3.0  # m/s


@dataclass
class ImuSample:
    timestamp: float
    gyro: tuple    # rad/s, body frame
    accel: tuple   # m/s^2, body frame specific force


@dataclass
class TofSample:
    timestamp: float
    distance: float  # m along body -z
    valid: bool


@dataclass
class FlowSample:
    timestamp: float
    flow: tuple      # px, accumulated displacement over the frame
    quality: float   # 0..1


@dataclass
class SensorFrame:
    """Whatever arrived at one control tick (None = not due)."""
    imu: ImuSample = None
    tof: TofSample = None
    flow: FlowSample = None


@dataclass
class NoiseConfig:
    gyro_noise_density: float = 0.0    # rad/s/sqrt(Hz)
    gyro_bias: tuple = (0.0, 0.0, 0.0)  # rad/s, true b_w, constant per run
    accel_noise_density: float = 0.0   # m/s^2/sqrt(Hz)
    vibration_amplitude: float = 0.0   # m/s^2 at flap frequency, full thrust
    tof_noise_std: float = 0.0         # m
    flow_noise_std: float = 0.0        # px, at h = 0
    flow_focal_scale: float = 385.0    # px per rad
    flow_noise_h_ref: float = 0.10     # m; noise std scales by (1 + h/h_ref)
    flow_quantize: bool = False        # round flow to the pixel grid
    tof_max_range: float = 0.6         # m
    tof_tilt_cutoff: float = math.radians(45.0)
    flow_min_height: float = 0.005     # m
    rng_seed: int = 0

    def validate(self):
        for name in ("gyro_noise_density", "accel_noise_density",
                     "vibration_amplitude", "tof_noise_std",
                     "flow_noise_std", "flow_focal_scale",
                     "flow_noise_h_ref", "tof_max_range"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")


def sample_imu(truth, accel_world, cfg: NoiseConfig, t: float,
               imu_rate: float = 480.0, flap_frequency: float = 330.0,
               thrust_frac: float = 0.0, gravity: float = 9.81,
               rng=None) -> ImuSample:
    """IMU measurement at time t.

    gyro  = ω + b_ω + white noise
    accel = Rᵀ(a_world + g e3) + vibration tone + white noise

    The vibration is a single tone at the flapping frequency, amplitude
    scaled by the commanded thrust fraction, split between the body x
    and z accelerometer axes with a tenth of it bleeding into the pitch
    gyro.  Sampled at 480 Hz the 330 Hz tone aliases down to 150 Hz.
    """
    q = truth.quaternion
    wx, wy, wz = truth.rates
    bx, by, bz = cfg.gyro_bias

    fx, fy, fz = quat.rotate_inv(
        q, (accel_world[0], accel_world[1], accel_world[2] + gravity))

    gx = wx + bx
    gy = wy + by
    gz = wz + bz

    if cfg.vibration_amplitude > 0.0 and thrust_frac > 0.0:
        ph = 2.0 * math.pi * flap_frequency * t
        a = cfg.vibration_amplitude * thrust_frac
        fx += a * math.sin(ph)
        fz += a * math.cos(ph)
        gy += 0.1 * a * math.sin(ph)

    if rng is not None and cfg.gyro_noise_density > 0.0:
        s = cfg.gyro_noise_density * math.sqrt(imu_rate)
        gx += s * rng[0].standard_normal()
        gy += s * rng[0].standard_normal()
        gz += s * rng[0].standard_normal()
    if rng is not None and cfg.accel_noise_density > 0.0:
        s = cfg.accel_noise_density * math.sqrt(imu_rate)
        fx += s * rng[1].standard_normal()
        fy += s * rng[1].standard_normal()
        fz += s * rng[1].standard_normal()

    return ImuSample(t, (gx, gy, gz), (fx, fy, fz))


def sample_tof(truth, terrain, cfg: NoiseConfig, t: float,
               rng=None) -> TofSample:
    """Range along body -z to the first terrain intersection."""
    q = truth.quaternion
    if quat.c33(q) < math.cos(cfg.tof_tilt_cutoff):
        return TofSample(t, 0.0, False)
    ez = quat.body_z_world(q)
    d = terrain.raycast(truth.position, (-ez[0], -ez[1], -ez[2]),
                        cfg.tof_max_range)
    if d is None:
        return TofSample(t, 0.0, False)
    if rng is not None and cfg.tof_noise_std > 0.0:
        d += cfg.tof_noise_std * rng.standard_normal()
        if d < 0.0:
            d = 0.0
    return TofSample(t, d, True)


def flow_quality(h: float, lateral_speed: float,
                 cfg: NoiseConfig) -> float:
    if h <= cfg.flow_min_height:
        return 0.0
    qh = 1.0 - h / _QUALITY_H_LIMIT
    qv = 1.0 - lateral_speed / _QUALITY_SPEED_LIMIT
    q = min(qh, 1.0) * min(qv, 1.0)
    return max(q, 0.0)


def sample_flow(truth, terrain, cfg: NoiseConfig, t: float,
                dt_frame: float, rng=None,
                carry=(0.0, 0.0)):
    """Optical flow over one frame interval; returns (sample, carry).

    Per axis the ideal displacement is the pinhole projection of
    lateral motion over height minus the rotation-induced term:

        o_x = f·Δt·(v_bx/h − ω_y)
        o_y = f·Δt·(v_by/h + ω_x)

    Pixel noise std grows linearly with height (reduced ground-texture
    resolution).  When quantization is enabled the output snaps to
    whole pixels and the subpixel remainder carries into the next
    frame, so no displacement is ever lost.
    """
    q = truth.quaternion
    h = truth.pz - terrain.height(truth.px, truth.py)
    vb = quat.rotate_inv(q, truth.velocity)
    speed = math.hypot(vb[0], vb[1])
    quality = flow_quality(h, speed, cfg)
    if quality <= 0.0:
        return FlowSample(t, (0.0, 0.0), 0.0), carry

    f = cfg.flow_focal_scale
    wx, wy = truth.wx, truth.wy
    ox = f * dt_frame * (vb[0] / h - wy)
    oy = f * dt_frame * (vb[1] / h + wx)

    if rng is not None and cfg.flow_noise_std > 0.0:
        s = cfg.flow_noise_std * (1.0 + h / cfg.flow_noise_h_ref)
        ox += s * rng.standard_normal()
        oy += s * rng.standard_normal()

    if cfg.flow_quantize:
        tx = ox + carry[0]
        ty = oy + carry[1]
        qx = float(round(tx))
        qy = float(round(ty))
        return FlowSample(t, (qx, qy), quality), (tx - qx, ty - qy)
    return FlowSample(t, (ox, oy), quality), carry


class SensorSchedule:
    """Per-sensor next-due accumulators against the 480 Hz base tick.

    Sensor n of a stream at rate r is due at n/r; a sensor is emitted
    when its due time falls at or before the current tick time (within
    1e-12 slack for float division).  Rates need not divide the base
    rate; nothing is ever dropped or duplicated.
    """

    def __init__(self, rates: dict):
        for name, r in rates.items():
            if r <= 0.0:
                raise ValueError(f"rate for {name} must be positive")
        self.rates = dict(rates)
        self.counts = {name: 0 for name in rates}

    def poll(self, t: float):
        """Names due at time t; advances their accumulators."""
        due = []
        for name, r in self.rates.items():
            if self.counts[name] / r <= t + 1e-12:
                due.append(name)
                self.counts[name] += 1
        return due


class SensorSuite:
    """Stateful wrapper: streams, schedule, flow frame state."""

    def __init__(self, cfg: NoiseConfig, terrain,
                 imu_rate=480.0, tof_rate=240.0, flow_rate=120.0,
                 flap_frequency=330.0, gravity=9.81):
        cfg.validate()
        self.cfg = cfg
        self.terrain = terrain
        self.imu_rate = imu_rate
        self.flap_frequency = flap_frequency
        self.gravity = gravity
        ss = np.random.SeedSequence(cfg.rng_seed)
        kids = ss.spawn(5)
        self._rng_gyro = np.random.default_rng(kids[0])
        self._rng_accel = np.random.default_rng(kids[1])
        self._rng_tof = np.random.default_rng(kids[2])
        self._rng_flow = np.random.default_rng(kids[3])
        self._rng_calib = np.random.default_rng(kids[4])
        self.schedule = SensorSchedule(
            {"imu": imu_rate, "tof": tof_rate, "flow": flow_rate})
        self._flow_carry = (0.0, 0.0)
        self._last_flow_t = -1.0 / flow_rate

    def calibrate_gyro_bias(self, duration: float = 1.0):
        """Pre-flight stationary average of the gyro stream.

        The vehicle sits still on the ground (zero rates, zero thrust,
        so no vibration), leaving bias plus white noise; the average
        over the calibration window seeds the estimator's b̂_ω.
        """
        n = max(1, int(round(duration * self.imu_rate)))
        s = self.cfg.gyro_noise_density * math.sqrt(self.imu_rate)
        bx, by, bz = self.cfg.gyro_bias
        if s > 0.0:
            mx = my = mz = 0.0
            for _ in range(n):
                mx += s * self._rng_calib.standard_normal()
                my += s * self._rng_calib.standard_normal()
                mz += s * self._rng_calib.standard_normal()
            return (bx + mx / n, by + my / n, bz + mz / n)
        return (bx, by, bz)

    def poll(self, truth, accel_world, thrust_frac, t: float) -> SensorFrame:
        """Generate whatever samples are due at tick time t."""
        due = self.schedule.poll(t)
        frame = SensorFrame()
        if "imu" in due:
            frame.imu = sample_imu(
                truth, accel_world, self.cfg, t,
                imu_rate=self.imu_rate, flap_frequency=self.flap_frequency,
                thrust_frac=thrust_frac, gravity=self.gravity,
                rng=(self._rng_gyro, self._rng_accel))
        if "tof" in due:
            frame.tof = sample_tof(truth, self.terrain, self.cfg, t,
                                   rng=self._rng_tof)
        if "flow" in due:
            dt_frame = t - self._last_flow_t
            frame.flow, self._flow_carry = sample_flow(
                truth, self.terrain, self.cfg, t, dt_frame,
                rng=self._rng_flow, carry=self._flow_carry)
            self._last_flow_t = t
        return frame
