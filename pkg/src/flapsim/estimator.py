"""Cascaded state estimator: Mahony attitude filter, 2x2 altitude
Kalman filter, per-axis 2x2 lateral-velocity Kalman filters, and
trapezoidal position integration.

The cascade runs strictly in that order every tick so each stage
consumes the freshest upstream estimate: attitude feeds the altitude
filter (tilt compensation and thrust projection), attitude plus
altitude feed the lateral filter (flow derotation and scaling), and the
lateral velocities integrate into position.

The whole estimator is written in unrolled scalar arithmetic.  No
vector or matrix object ever exists here: each 2x2 covariance is three
scalars (p00, p01, p11 -- symmetry is structural), every update is
spelled out by hand, and the largest algebraic object formed anywhere
is a 2x2 covariance.  This mirrors a microcontroller implementation
and is what lets the whole pipeline run in single precision: the
arithmetic type is selected once at construction (`precision="double"`
uses native floats, `"single"` uses float32 scalars throughout).

Conventions: quaternion q̂ is Hamilton scalar-first mapping body to
world; ẑ is height above local terrain (what the downward rangefinder
observes); lateral velocity and position are world-frame.
"""

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class EstimatorConfig:
    # Mahony attitude filter
    kp: float = 1.0
    ki: float = 0.05
    bias_limit: float = 0.1            # rad/s, per axis clamp on b̂_ω
    use_bias_integral: bool = True     # integrate b̂ in flight
    seed_bias_from_calibration: bool = True
    calib_duration: float = 1.0        # s of stationary pre-flight gyro
    accel_gate_lo: float = 0.5         # g; gravity correction applied only
    accel_gate_hi: float = 1.5         # when |accel| is inside the gate

    # altitude Kalman filter (state [z, ż])
    q_accel: float = 3.0e-3            # (m/s^2)^2/Hz process noise
    r_z: float = 9.0e-6                # m^2 range measurement variance

    # lateral Kalman filters (state per axis [v, flow error])
    q_acc_lat: float = 1.0e-2          # (m/s^2)^2/Hz process noise on v
    q_flow_err: float = 1.0e-6         # (m/s)^2/Hz random walk on e
    r_flow_px: float = 0.35            # px, assumed flow pixel noise std

    # initial covariances
    p0_z: float = 1.0e-4
    p0_vz: float = 1.0e-2
    p0_v: float = 1.0e-2
    p0_e: float = 1.0e-4
    cov_ceiling: float = 10.0          # upper clamp on diagonal entries

    # the filter's copy of the physical constants (firmware-style)
    mass: float = 1.29e-3
    gravity: float = 9.81
    drag_lin: float = 2.0e-3           # N s/m, lateral drag model
    focal_scale: float = 385.0         # px per rad
    flow_rate: float = 120.0           # Hz nominal, first-frame interval
    min_flow_height: float = 0.005     # m
    tilt_cutoff: float = math.radians(45.0)


@dataclass
class EstimatedState:
    """Snapshot of the belief after one tick (for logging/control)."""
    t: float
    q: tuple
    omega: tuple
    bias: tuple
    z: float
    vz: float
    vx: float
    vy: float
    x: float
    y: float
    alt_cov: tuple    # (p00, p01, p11)
    lat_cov_x: tuple
    lat_cov_y: tuple
    thrust_in: float  # F the filters consumed this tick
    fault: bool = False


def tilt_compensate_range(q_hat, distance, tilt_cutoff=math.radians(45.0)):
    """Map slant range along body -z to vertical height.

    z = d * c33, where c33 is the body-z / world-z direction cosine.
    Beyond the tilt cutoff the geometry is unreliable and the sample
    is declared invalid.
    """
    w, x, y, z = q_hat
    c33 = 1.0 - 2.0 * (x * x + y * y)
    if c33 < math.cos(tilt_cutoff):
        return 0.0, False
    return distance * c33, True


class CascadedEstimator:
    """The full onboard belief, advanced one control tick at a time."""

    def __init__(self, cfg: EstimatorConfig, precision: str = "double"):
        if precision == "single":
            d = np.float32
            self._sqrt, self._sin = np.sqrt, np.sin
            self._cos, self._atan2 = np.cos, np.arctan2
        elif precision == "double":
            d = float
            self._sqrt, self._sin = math.sqrt, math.sin
            self._cos, self._atan2 = math.cos, math.atan2
        else:
            raise ValueError(f"unknown precision mode {precision!r}")
        self.precision = precision
        self.cfg = cfg
        self._d = d

        # attitude
        self.qw, self.qx, self.qy, self.qz = d(1.0), d(0.0), d(0.0), d(0.0)
        self.owx, self.owy, self.owz = d(0.0), d(0.0), d(0.0)
        self.bx, self.by, self.bz = d(0.0), d(0.0), d(0.0)
        # altitude [z, vz] + covariance scalars
        self.z, self.vz = d(0.0), d(0.0)
        self.az00, self.az01, self.az11 = d(cfg.p0_z), d(0.0), d(cfg.p0_vz)
        # lateral per axis [v, e] + covariance scalars
        self.vx, self.ex = d(0.0), d(0.0)
        self.lx00, self.lx01, self.lx11 = d(cfg.p0_v), d(0.0), d(cfg.p0_e)
        self.vy, self.ey = d(0.0), d(0.0)
        self.ly00, self.ly01, self.ly11 = d(cfg.p0_v), d(0.0), d(cfg.p0_e)
        # integrated position
        self.x, self.y = d(0.0), d(0.0)

        self._t_last = -1.0
        self._last_flow_t = -1.0 / cfg.flow_rate
        self.dropped_samples = 0
        self.cov_reprojections = 0
        self._gate_lo2 = d((cfg.accel_gate_lo * cfg.gravity) ** 2)
        self._gate_hi2 = d((cfg.accel_gate_hi * cfg.gravity) ** 2)

    # -- initialization ------------------------------------------------

    def initialize(self, q, z, vz=0.0, vx=0.0, vy=0.0, x=0.0, y=0.0,
                   bias=(0.0, 0.0, 0.0)):
        d = self._d
        n = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
        self.qw, self.qx = d(q[0] / n), d(q[1] / n)
        self.qy, self.qz = d(q[2] / n), d(q[3] / n)
        self.z, self.vz = d(z), d(vz)
        self.vx, self.vy = d(vx), d(vy)
        self.ex, self.ey = d(0.0), d(0.0)
        self.x, self.y = d(x), d(y)
        self.bx, self.by, self.bz = d(bias[0]), d(bias[1]), d(bias[2])

    # -- pieces of the cascade ------------------------------------------

    def _mahony(self, gyro, accel, dt):
        """Eq-style update: ω̂ = ω^m − b̂; innovation from the cross
        product of measured and predicted gravity directions; bias
        integrates the innovation; q̂ propagates by the exact
        exponential map of (ω̂ + kP·e)·dt."""
        d = self._d
        cfg = self.cfg
        gx, gy, gz = d(gyro[0]), d(gyro[1]), d(gyro[2])
        fx, fy, fz = d(accel[0]), d(accel[1]), d(accel[2])

        wx = gx - self.bx
        wy = gy - self.by
        wz = gz - self.bz

        qw, qx, qy, qz = self.qw, self.qx, self.qy, self.qz
        # predicted gravity direction in body frame: Rᵀ e3
        vpx = 2.0 * (qx * qz - qw * qy)
        vpy = 2.0 * (qy * qz + qw * qx)
        vpz = 1.0 - 2.0 * (qx * qx + qy * qy)

        n2 = fx * fx + fy * fy + fz * fz
        if self._gate_lo2 < n2 < self._gate_hi2:
            n = self._sqrt(n2)
            vmx, vmy, vmz = fx / n, fy / n, fz / n
            # innovation e = v_meas x v_pred
            ix = vmy * vpz - vmz * vpy
            iy = vmz * vpx - vmx * vpz
            iz = vmx * vpy - vmy * vpx
        else:
            ix = iy = iz = d(0.0)

        if cfg.use_bias_integral:
            lim = d(cfg.bias_limit)
            bx = self.bx - cfg.ki * ix * dt
            by = self.by - cfg.ki * iy * dt
            bz = self.bz - cfg.ki * iz * dt
            self.bx = -lim if bx < -lim else (lim if bx > lim else bx)
            self.by = -lim if by < -lim else (lim if by > lim else by)
            self.bz = -lim if bz < -lim else (lim if bz > lim else bz)

        cx = wx + cfg.kp * ix
        cy = wy + cfg.kp * iy
        cz = wz + cfg.kp * iz

        th = self._sqrt(cx * cx + cy * cy + cz * cz) * dt
        if th < 1e-9:
            h = 0.5 * dt
            dw, dx_, dy_, dz_ = d(1.0), cx * h, cy * h, cz * h
        else:
            hh = 0.5 * th
            s = self._sin(hh) / (th / dt)
            dw, dx_, dy_, dz_ = self._cos(hh), cx * s, cy * s, cz * s

        nw = qw * dw - qx * dx_ - qy * dy_ - qz * dz_
        nx = qw * dx_ + qx * dw + qy * dz_ - qz * dy_
        ny = qw * dy_ - qx * dz_ + qy * dw + qz * dx_
        nz = qw * dz_ + qx * dy_ - qy * dx_ + qz * dw
        nn = self._sqrt(nw * nw + nx * nx + ny * ny + nz * nz)
        self.qw, self.qx = nw / nn, nx / nn
        self.qy, self.qz = ny / nn, nz / nn
        self.owx, self.owy, self.owz = wx, wy, wz

    def _altitude_predict(self, F, dt):
        cfg = self.cfg
        c33 = 1.0 - 2.0 * (self.qx * self.qx + self.qy * self.qy)
        az = c33 * F / cfg.mass - cfg.gravity
        self.z = self.z + dt * self.vz + 0.5 * dt * dt * az
        self.vz = self.vz + dt * az
        q = self._d(cfg.q_accel)
        self.az00 = self.az00 + dt * (2.0 * self.az01 + dt * self.az11) \
            + q * dt * dt * dt / 3.0
        self.az01 = self.az01 + dt * self.az11 + 0.5 * q * dt * dt
        self.az11 = self.az11 + q * dt
        self._bound_alt_cov()

    def _altitude_update(self, z_meas):
        s = self.az00 + self._d(self.cfg.r_z)
        k0 = self.az00 / s
        k1 = self.az01 / s
        innov = self._d(z_meas) - self.z
        self.z = self.z + k0 * innov
        self.vz = self.vz + k1 * innov
        p00, p01, p11 = self.az00, self.az01, self.az11
        self.az00 = p00 - p00 * p00 / s
        self.az01 = p01 - p00 * p01 / s
        self.az11 = p11 - p01 * p01 / s
        self._bound_alt_cov()

    def _bound_alt_cov(self):
        ceil = self.cfg.cov_ceiling
        if self.az00 < 0.0:
            self.az00 = self._d(0.0)
            self.cov_reprojections += 1
        if self.az11 < 0.0:
            self.az11 = self._d(0.0)
            self.cov_reprojections += 1
        if self.az00 > ceil:
            self.az00 = self._d(ceil)
        if self.az11 > ceil:
            self.az11 = self._d(ceil)
        lim = self._sqrt(self.az00 * self.az11)
        if self.az01 > lim:
            self.az01 = lim
            self.cov_reprojections += 1
        elif self.az01 < -lim:
            self.az01 = -lim
            self.cov_reprojections += 1

    def _lateral_predict(self, F, dt):
        cfg = self.cfg
        qw, qx, qy, qz = self.qw, self.qx, self.qy, self.qz
        a = F / cfg.mass
        # lateral components of R(q̂)·[0,0,F/m], minus the drag model
        k = self._d(cfg.drag_lin / cfg.mass)
        ax = a * 2.0 * (qx * qz + qw * qy) - k * self.vx
        ay = a * 2.0 * (qy * qz - qw * qx) - k * self.vy
        self.vx = self.vx + dt * ax
        self.vy = self.vy + dt * ay
        qv = self._d(cfg.q_acc_lat) * dt
        qe = self._d(cfg.q_flow_err) * dt
        self.lx00 = self.lx00 + qv
        self.lx11 = self.lx11 + qe
        self.ly00 = self.ly00 + qv
        self.ly11 = self.ly11 + qe

    def _lateral_update(self, flow, t):
        """Flow → velocity measurement → per-axis 2x2 update.

        The pixel displacement is derotated with ω̂, scaled by
        ẑ/(focal·Δt), and rotated into the world frame by the
        estimated yaw.  Measurement model per axis: m = v + e
        (H = [1, 1]), where e is the slow flow-velocity error state
        that absorbs height-scaling mismatch.
        """
        cfg = self.cfg
        dt_frame = self._d(t - self._last_flow_t)
        if dt_frame <= 0.0:
            return
        scale = self.z / (self._d(cfg.focal_scale) * dt_frame)
        ox, oy = self._d(flow[0]), self._d(flow[1])
        vbx = ox * scale + self.owy * self.z
        vby = oy * scale - self.owx * self.z

        # world-frame rotation by estimated yaw
        psi = self._atan2(2.0 * (self.qw * self.qz + self.qx * self.qy),
                          1.0 - 2.0 * (self.qy * self.qy + self.qz * self.qz))
        c, s = self._cos(psi), self._sin(psi)
        mx = c * vbx - s * vby
        my = s * vbx + c * vby

        r = self._d(cfg.r_flow_px) * scale
        r2 = r * r

        # x axis
        p00, p01, p11 = self.lx00, self.lx01, self.lx11
        sx = p00 + 2.0 * p01 + p11 + r2
        innov = mx - (self.vx + self.ex)
        self.vx = self.vx + (p00 + p01) / sx * innov
        self.ex = self.ex + (p01 + p11) / sx * innov
        a_, b_ = p00 + p01, p01 + p11
        self.lx00 = p00 - a_ * a_ / sx
        self.lx01 = p01 - a_ * b_ / sx
        self.lx11 = p11 - b_ * b_ / sx

        # y axis
        p00, p01, p11 = self.ly00, self.ly01, self.ly11
        sy = p00 + 2.0 * p01 + p11 + r2
        innov = my - (self.vy + self.ey)
        self.vy = self.vy + (p00 + p01) / sy * innov
        self.ey = self.ey + (p01 + p11) / sy * innov
        a_, b_ = p00 + p01, p01 + p11
        self.ly00 = p00 - a_ * a_ / sy
        self.ly01 = p01 - a_ * b_ / sy
        self.ly11 = p11 - b_ * b_ / sy

        self._bound_lat_cov()

    def _bound_lat_cov(self):
        ceil = self.cfg.cov_ceiling
        for p00n, p01n, p11n in (("lx00", "lx01", "lx11"),
                                 ("ly00", "ly01", "ly11")):
            p00 = getattr(self, p00n)
            p11 = getattr(self, p11n)
            p01 = getattr(self, p01n)
            if p00 < 0.0:
                p00 = self._d(0.0)
                self.cov_reprojections += 1
            if p11 < 0.0:
                p11 = self._d(0.0)
                self.cov_reprojections += 1
            if p00 > ceil:
                p00 = self._d(ceil)
            if p11 > ceil:
                p11 = self._d(ceil)
            lim = self._sqrt(p00 * p11)
            if p01 > lim:
                p01 = lim
                self.cov_reprojections += 1
            elif p01 < -lim:
                p01 = -lim
                self.cov_reprojections += 1
            setattr(self, p00n, p00)
            setattr(self, p01n, p01)
            setattr(self, p11n, p11)

    # -- the public tick -------------------------------------------------

    def tick(self, frame, F, t, dt, fuse_range=True) -> EstimatedState:
        """Advance the cascade one control tick.

        frame: SensorFrame (samples due this tick, None where not due)
        F: most recent commanded thrust, the command that acted over
        the elapsed interval.
        fuse_range: False in absolute-altitude mode — the range update
        is skipped and height propagates inertially, so ẑ holds a
        fixed world altitude instead of tracking the terrain.
        """
        if t < self._t_last:
            self.dropped_samples += 1
            return self.snapshot(self._t_last, F)
        self._t_last = t

        d = self._d
        dt = d(dt)
        F = d(F)

        if frame is not None and frame.imu is not None:
            self._mahony(frame.imu.gyro, frame.imu.accel, dt)
        else:
            # no gyro this tick: coast on the last rate estimate
            self._mahony_coast(dt)

        self._altitude_predict(F, dt)
        if (fuse_range and frame is not None
                and frame.tof is not None and frame.tof.valid):
            z_meas, ok = tilt_compensate_range(
                (self.qw, self.qx, self.qy, self.qz),
                frame.tof.distance, self.cfg.tilt_cutoff)
            if ok:
                self._altitude_update(z_meas)

        vx_prev, vy_prev = self.vx, self.vy
        self._lateral_predict(F, dt)
        if (frame is not None and frame.flow is not None
                and frame.flow.quality > 0.0
                and self.z > self.cfg.min_flow_height):
            self._lateral_update(frame.flow.flow, t)
        if frame is not None and frame.flow is not None:
            self._last_flow_t = t

        # trapezoidal position integration of the velocity estimates
        half = d(0.5)
        self.x = self.x + dt * half * (vx_prev + self.vx)
        self.y = self.y + dt * half * (vy_prev + self.vy)

        return self.snapshot(t, F)

    def _mahony_coast(self, dt):
        cx, cy, cz = self.owx, self.owy, self.owz
        th = self._sqrt(cx * cx + cy * cy + cz * cz) * dt
        if th < 1e-9:
            h = 0.5 * dt
            dw, dx_, dy_, dz_ = self._d(1.0), cx * h, cy * h, cz * h
        else:
            hh = 0.5 * th
            s = self._sin(hh) / (th / dt)
            dw, dx_, dy_, dz_ = self._cos(hh), cx * s, cy * s, cz * s
        qw, qx, qy, qz = self.qw, self.qx, self.qy, self.qz
        nw = qw * dw - qx * dx_ - qy * dy_ - qz * dz_
        nx = qw * dx_ + qx * dw + qy * dz_ - qz * dy_
        ny = qw * dy_ - qx * dz_ + qy * dw + qz * dx_
        nz = qw * dz_ + qx * dy_ - qy * dx_ + qz * dw
        nn = self._sqrt(nw * nw + nx * nx + ny * ny + nz * nz)
        self.qw, self.qx = nw / nn, nx / nn
        self.qy, self.qz = ny / nn, nz / nn

    def snapshot(self, t, F) -> EstimatedState:
        return EstimatedState(
            t=float(t),
            q=(self.qw, self.qx, self.qy, self.qz),
            omega=(self.owx, self.owy, self.owz),
            bias=(self.bx, self.by, self.bz),
            z=self.z, vz=self.vz, vx=self.vx, vy=self.vy,
            x=self.x, y=self.y,
            alt_cov=(self.az00, self.az01, self.az11),
            lat_cov_x=(self.lx00, self.lx01, self.lx11),
            lat_cov_y=(self.ly00, self.ly01, self.ly11),
            thrust_in=float(F))
