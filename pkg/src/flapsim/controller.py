"""Cascaded flight controller: position/velocity outer loops mapping
to a desired thrust vector, quaternion attitude inner loop mapping to
body torques, at the fixed 480 Hz control rate.

Outer loop: position error -> velocity demand (clamped) -> acceleration
demand, with an integral term on altitude only (gravity offset lives
there; lateral loops have none to wind up).  The acceleration demand
plus gravity defines the thrust vector; its direction, tilt-clamped,
plus the yaw setpoint defines the desired attitude; a PD law on the
quaternion error's vector part and the body rates produces torque.

Anti-windup freezes the altitude integral while thrust saturates.  A
non-finite estimate latches a fault and commands a hover-hold (F = m g,
zero torque) so a corrupted filter can never emit unbounded actuation.

Like the estimator, all arithmetic is scalar and precision-selectable:
the deployment build of this controller ran in single precision, so
`precision="single"` executes every operation in float32.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class ControlCommand:
    thrust: float          # N, total
    torque: tuple          # N m, body frame
    timestamp: float
    fault: bool = False


@dataclass
class ControllerGains:
    # outer loops
    kp_pos: float = 3.0        # 1/s, lateral position -> velocity demand
    v_max_lat: float = 0.7     # m/s
    kv_lat: float = 5.0        # 1/s, velocity -> acceleration demand
    kp_alt: float = 3.0        # 1/s
    v_max_z: float = 0.5       # m/s
    kv_z: float = 6.0          # 1/s
    ki_alt: float = 4.0        # 1/s^2 on the altitude-error integral
    i_limit: float = 0.5       # m s, integral clamp
    # inner attitude loop
    kp_att: float = 5.4e-4     # N m / rad
    kd_att: float = 1.62e-5    # N m / (rad/s)
    kp_yaw: float = 2.0e-4
    kd_yaw: float = 1.8e-5
    # limits
    max_tilt: float = math.radians(25.0)
    max_torque_xy: float = 3.0e-4   # N m
    max_torque_z: float = 1.0e-4
    # physical constants (firmware copy)
    mass: float = 1.29e-3
    gravity: float = 9.81
    max_thrust: float = 1.9 * 1.29e-3 * 9.81

    def validate(self):
        if self.max_tilt > math.radians(45.0):
            raise ValueError("max_tilt beyond 45 deg would blind the ToF")
        for name in ("kp_pos", "kv_lat", "kp_alt", "kv_z", "ki_alt",
                     "kp_att", "kd_att", "kp_yaw", "kd_yaw"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")


class CascadedController:
    def __init__(self, gains: ControllerGains, precision: str = "double"):
        gains.validate()
        if precision == "single":
            self._d = np.float32
            self._sqrt = np.sqrt
        elif precision == "double":
            self._d = float
            self._sqrt = math.sqrt
        else:
            raise ValueError(f"unknown precision mode {precision!r}")
        self.precision = precision
        self.g = gains
        self._tan_tilt = math.tan(gains.max_tilt)
        self._integ = self._d(0.0)
        self.fault = False
        self.fault_count = 0
        self._ticks = 0

    def set_precision_mode(self, precision: str):
        """Switch arithmetic width; only legal before the first tick."""
        if self._ticks:
            raise RuntimeError("precision mode is fixed once running")
        self.__init__(self.g, precision)

    def reset(self):
        self._integ = self._d(0.0)
        self.fault = False

    def _hover_hold(self, t):
        return ControlCommand(self.g.mass * self.g.gravity,
                              (0.0, 0.0, 0.0), t, fault=True)

    def tick(self, est, sp, dt, t) -> ControlCommand:
        g = self.g
        d = self._d
        self._ticks += 1

        finite = (math.isfinite(est.z) and math.isfinite(est.vz)
                  and math.isfinite(est.vx) and math.isfinite(est.vy)
                  and math.isfinite(est.x) and math.isfinite(est.y)
                  and math.isfinite(est.q[0]) and math.isfinite(est.q[1])
                  and math.isfinite(est.q[2]) and math.isfinite(est.q[3])
                  and math.isfinite(est.omega[0])
                  and math.isfinite(est.omega[1])
                  and math.isfinite(est.omega[2]))
        if not finite:
            self.fault = True
            self.fault_count += 1
            return self._hover_hold(t)

        if sp.cut_thrust:
            return ControlCommand(0.0, (0.0, 0.0, 0.0), t)

        dt = d(dt)

        # outer loop: position -> velocity demand -> acceleration demand
        ex = d(sp.x) - est.x
        ey = d(sp.y) - est.y
        ez = d(sp.z) - est.z

        vm = d(g.v_max_lat)
        vdx = g.kp_pos * ex + d(sp.vx_ff)
        vdx = -vm if vdx < -vm else (vm if vdx > vm else vdx)
        vdy = g.kp_pos * ey + d(sp.vy_ff)
        vdy = -vm if vdy < -vm else (vm if vdy > vm else vdy)
        vmz = d(g.v_max_z)
        vdz = g.kp_alt * ez + d(sp.vz_ff)
        vdz = -vmz if vdz < -vmz else (vmz if vdz > vmz else vdz)

        adx = g.kv_lat * (vdx - est.vx)
        ady = g.kv_lat * (vdy - est.vy)
        adz = g.kv_z * (vdz - est.vz) + g.ki_alt * self._integ

        # thrust vector = acceleration demand + gravity; keep it
        # pointing up and inside the tilt cone
        tz = adz + d(g.gravity)
        floor = d(0.1 * g.gravity)
        if tz < floor:
            tz = floor
        axy2 = adx * adx + ady * ady
        if axy2 > 0.0:
            axy = self._sqrt(axy2)
            amax = tz * d(self._tan_tilt)
            if axy > amax:
                k = amax / axy
                adx = adx * k
                ady = ady * k
                axy2 = amax * amax
            norm = self._sqrt(axy2 + tz * tz)
            F = g.mass * norm
            zdx = adx / norm
            zdy = ady / norm
            zdz = tz / norm
        else:
            # pure-vertical branch: exact at equilibrium (F = m g)
            F = g.mass * tz
            zdx = zdy = d(0.0)
            zdz = d(1.0)

        saturated = False
        if F > g.max_thrust:
            F = d(g.max_thrust)
            saturated = True
        elif F < 0.0:
            F = d(0.0)
            saturated = True

        # anti-windup: integrate altitude error only while unsaturated
        if not saturated:
            lim = d(g.i_limit)
            integ = self._integ + ez * dt
            self._integ = -lim if integ < -lim else \
                (lim if integ > lim else integ)

        # desired attitude: tilt (e3 -> thrust direction) then yaw
        if zdx == 0.0 and zdy == 0.0:
            hy = d(0.5) * d(sp.yaw)
            qdw, qdx, qdy, qdz = self._cos_sin_yaw(hy)
        else:
            tw = self._sqrt((d(1.0) + zdz) * d(0.5))
            s = d(0.5) / tw
            tx_ = -zdy * s
            ty_ = zdx * s
            hy = d(0.5) * d(sp.yaw)
            cy, sy = self._cos_sin(hy)
            # (tw, tx_, ty_, 0) ⊗ (cy, 0, 0, sy)
            qdw = tw * cy
            qdx = tx_ * cy + ty_ * sy
            qdy = ty_ * cy - tx_ * sy
            qdz = tw * sy

        # attitude error in the body frame: q_err = q̂* ⊗ q_des
        qw, qx, qy, qz = est.q
        ew = qw * qdw + qx * qdx + qy * qdy + qz * qdz
        ex_ = qw * qdx - qx * qdw - qy * qdz + qz * qdy
        ey_ = qw * qdy + qx * qdz - qy * qdw - qz * qdx
        ez_ = qw * qdz - qx * qdy + qy * qdx - qz * qdw
        if ew < 0.0:
            ex_, ey_, ez_ = -ex_, -ey_, -ez_

        wx, wy, wz = est.omega
        two = d(2.0)
        tqx = g.kp_att * two * ex_ - g.kd_att * wx
        tqy = g.kp_att * two * ey_ - g.kd_att * wy
        tqz = g.kp_yaw * two * ez_ - g.kd_yaw * (wz - d(sp.yaw_rate_ff))

        mt = d(g.max_torque_xy)
        tqx = -mt if tqx < -mt else (mt if tqx > mt else tqx)
        tqy = -mt if tqy < -mt else (mt if tqy > mt else tqy)
        mz = d(g.max_torque_z)
        tqz = -mz if tqz < -mz else (mz if tqz > mz else tqz)

        return ControlCommand(F, (tqx, tqy, tqz), t)

    def _cos_sin(self, h):
        if self.precision == "single":
            return np.cos(h), np.sin(h)
        return math.cos(h), math.sin(h)

    def _cos_sin_yaw(self, hy):
        c, s = self._cos_sin(hy)
        return c, self._d(0.0), self._d(0.0), s
