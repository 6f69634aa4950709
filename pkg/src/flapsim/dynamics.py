"""Rigid-body truth dynamics for the flapping-wing vehicle.

The airframe is modeled as a single rigid body driven by a total thrust
force along body +z and a three-axis control torque, with per-axis
linear drag standing in for the time-averaged aerodynamics of the
flapping wings.  The 330 Hz flapping cycle itself is far above the
control bandwidth, so its only simulated trace is the tonal vibration
injected by the sensor models; the truth states here are cycle
averages.

Integration is classic fixed-step RK4 on the 13-dimensional state
(position, velocity, quaternion, body rates) with the quaternion
renormalized after each step.  All arithmetic is plain float64.
"""

import math
from dataclasses import dataclass

from . import quat

_DEFAULT_MASS = 1.29e-3
_DEFAULT_G = 9.81


@dataclass
class VehicleParams:
    mass: float = _DEFAULT_MASS                      # kg, flight-ready
    inertia: tuple = (1.5e-7, 1.5e-7, 2.5e-7)        # kg m^2, body diagonal
    max_total_thrust: float = 1.9 * _DEFAULT_MASS * _DEFAULT_G   # N
    gravity: float = _DEFAULT_G                      # m/s^2
    linear_drag: tuple = (2.0e-3, 2.0e-3, 2.0e-3)    # N s/m per world axis
    flap_frequency: float = 330.0                    # Hz, drives vibration

    def validate(self):
        if not self.mass > 0.0:
            raise ValueError("mass must be positive")
        if any(i <= 0.0 for i in self.inertia):
            raise ValueError("inertia must be positive definite")
        if self.max_total_thrust < self.mass * self.gravity:
            raise ValueError("max thrust below weight: vehicle cannot hover")

    @property
    def weight(self):
        return self.mass * self.gravity


@dataclass
class VehicleState:
    px: float = 0.0
    py: float = 0.0
    pz: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    vz: float = 0.0
    qw: float = 1.0
    qx: float = 0.0
    qy: float = 0.0
    qz: float = 0.0
    wx: float = 0.0
    wy: float = 0.0
    wz: float = 0.0
    time: float = 0.0
    landed: bool = False

    @property
    def quaternion(self):
        return (self.qw, self.qx, self.qy, self.qz)

    @property
    def position(self):
        return (self.px, self.py, self.pz)

    @property
    def velocity(self):
        return (self.vx, self.vy, self.vz)

    @property
    def rates(self):
        return (self.wx, self.wy, self.wz)

    def copy(self):
        return VehicleState(self.px, self.py, self.pz,
                            self.vx, self.vy, self.vz,
                            self.qw, self.qx, self.qy, self.qz,
                            self.wx, self.wy, self.wz,
                            self.time, self.landed)

    def is_finite(self):
        return all(math.isfinite(v) for v in
                   (self.px, self.py, self.pz, self.vx, self.vy, self.vz,
                    self.qw, self.qx, self.qy, self.qz,
                    self.wx, self.wy, self.wz))


def accel_world(state: VehicleState, F: float, params: VehicleParams):
    """World-frame proper acceleration for the given thrust.

    Shared between the integrator and the accelerometer model so the
    sensor sees exactly the forces the truth state obeys.
    """
    ezx, ezy, ezz = quat.body_z_world(state.quaternion)
    a = F / params.mass
    dx, dy, dz = params.linear_drag
    m = params.mass
    return (a * ezx - dx * state.vx / m,
            a * ezy - dy * state.vy / m,
            a * ezz - dz * state.vz / m - params.gravity)


def _deriv(s, F, tx, ty, tz, p: VehicleParams):
    px, py, pz, vx, vy, vz, qw, qx, qy, qz, wx, wy, wz = s
    m = p.mass

    # thrust direction = body z in world frame (third column of R)
    ezx = 2.0 * (qx * qz + qw * qy)
    ezy = 2.0 * (qy * qz - qw * qx)
    ezz = 1.0 - 2.0 * (qx * qx + qy * qy)

    a = F / m
    dgx, dgy, dgz = p.linear_drag
    ax = a * ezx - dgx * vx / m
    ay = a * ezy - dgy * vy / m
    az = a * ezz - dgz * vz / m - p.gravity

    # q̇ = ½ q ⊗ [0, ω]
    dqw = 0.5 * (-qx * wx - qy * wy - qz * wz)
    dqx = 0.5 * (qw * wx + qy * wz - qz * wy)
    dqy = 0.5 * (qw * wy - qx * wz + qz * wx)
    dqz = 0.5 * (qw * wz + qx * wy - qy * wx)

    # I ω̇ = τ − ω × (I ω)
    ixx, iyy, izz = p.inertia
    hx = ixx * wx
    hy = iyy * wy
    hz = izz * wz
    dwx = (tx - (wy * hz - wz * hy)) / ixx
    dwy = (ty - (wz * hx - wx * hz)) / iyy
    dwz = (tz - (wx * hy - wy * hx)) / izz

    return (vx, vy, vz, ax, ay, az, dqw, dqx, dqy, dqz, dwx, dwy, dwz)


def step_dynamics(state: VehicleState, thrust: float, torque, dt: float,
                  params: VehicleParams) -> VehicleState:
    """Advance the truth state by dt under (thrust, torque).

    Thrust is expected pre-saturated by the controller; a defensive
    clamp to [0, max_total_thrust] is applied anyway so no input can
    inject unphysical force.  Non-finite inputs are rejected loudly:
    NaN must never propagate silently into the truth trajectory.
    """
    tx, ty, tz = torque
    if not (math.isfinite(thrust) and math.isfinite(tx)
            and math.isfinite(ty) and math.isfinite(tz)):
        raise ValueError("non-finite control command")
    if not state.is_finite():
        raise ValueError("non-finite vehicle state")
    if not 0.0 < dt <= 1.0 / 480.0 + 1e-12:
        raise ValueError("dt outside (0, 1/480] s")

    if thrust < 0.0:
        thrust = 0.0
    elif thrust > params.max_total_thrust:
        thrust = params.max_total_thrust

    if state.landed and thrust <= params.weight:
        # resting on the ground; nothing to integrate
        out = state.copy()
        out.time = state.time + dt
        return out

    s0 = (state.px, state.py, state.pz, state.vx, state.vy, state.vz,
          state.qw, state.qx, state.qy, state.qz,
          state.wx, state.wy, state.wz)

    k1 = _deriv(s0, thrust, tx, ty, tz, params)
    h = 0.5 * dt
    s1 = tuple(a + h * b for a, b in zip(s0, k1))
    k2 = _deriv(s1, thrust, tx, ty, tz, params)
    s2 = tuple(a + h * b for a, b in zip(s0, k2))
    k3 = _deriv(s2, thrust, tx, ty, tz, params)
    s3 = tuple(a + dt * b for a, b in zip(s0, k3))
    k4 = _deriv(s3, thrust, tx, ty, tz, params)

    w = dt / 6.0
    sn = tuple(a + w * (b + 2.0 * (c + d) + e)
               for a, b, c, d, e in zip(s0, k1, k2, k3, k4))

    q = quat.normalize((sn[6], sn[7], sn[8], sn[9]))
    return VehicleState(sn[0], sn[1], sn[2], sn[3], sn[4], sn[5],
                        q[0], q[1], q[2], q[3], sn[10], sn[11], sn[12],
                        state.time + dt, False)


def resolve_ground_contact(state: VehicleState, terrain) -> VehicleState:
    """Clamp a descending vehicle to the terrain surface.

    Contact is inelastic: position snaps to the surface and all
    velocities and rates zero out (the airframe lands on its feet).
    The landed flag clears once the vehicle climbs clear of the
    surface again.
    """
    h = terrain.height(state.px, state.py)
    if state.pz < h and state.vz < 0.0:
        out = state.copy()
        out.pz = h
        out.vx = out.vy = out.vz = 0.0
        out.wx = out.wy = out.wz = 0.0
        out.landed = True
        return out
    if state.landed and state.pz > h + 0.002:
        out = state.copy()
        out.landed = False
        return out
    return state
