"""Quaternion and small-vector helpers.

Conventions used throughout the package:

* quaternions are Hamilton, scalar-first ``(w, x, y, z)``, unit norm,
  and encode the body->world rotation (``rotate(q, v_body) == v_world``)
* the world frame is Z-up, the body frame is x-forward / y-left / z-up

Everything here works on plain tuples of scalars so the same functions
serve float64 truth code and dtype-typed filter code alike.
"""

import math


def mul(q, r):
    # Hamilton product q ⊗ r
    qw, qx, qy, qz = q
    rw, rx, ry, rz = r
    return (
        qw * rw - qx * rx - qy * ry - qz * rz,
        qw * rx + qx * rw + qy * rz - qz * ry,
        qw * ry - qx * rz + qy * rw + qz * rx,
        qw * rz + qx * ry - qy * rx + qz * rw,
    )


def conj(q):
    return (q[0], -q[1], -q[2], -q[3])


def normalize(q):
    w, x, y, z = q
    n = math.sqrt(w * w + x * x + y * y + z * z)
    return (w / n, x / n, y / n, z / n)


def rotate(q, v):
    """Rotate vector v from body to world frame: q ⊗ v ⊗ q*."""
    w, x, y, z = q
    vx, vy, vz = v
    # expanded form of q v q*, no temporaries
    tx = 2.0 * (y * vz - z * vy)
    ty = 2.0 * (z * vx - x * vz)
    tz = 2.0 * (x * vy - y * vx)
    return (
        vx + w * tx + (y * tz - z * ty),
        vy + w * ty + (z * tx - x * tz),
        vz + w * tz + (x * ty - y * tx),
    )


def rotate_inv(q, v):
    """Rotate vector v from world to body frame."""
    return rotate(conj(q), v)


def from_axis_angle(axis, angle):
    ax, ay, az = axis
    n = math.sqrt(ax * ax + ay * ay + az * az)
    if n == 0.0:
        return (1.0, 0.0, 0.0, 0.0)
    h = 0.5 * angle
    s = math.sin(h) / n
    return (math.cos(h), ax * s, ay * s, az * s)


def exp_step(q, wx, wy, wz, dt):
    """Propagate q through one step of constant body rate ω.

    Uses the exact exponential map q ⊗ exp(½ ω dt) rather than the
    first-order update, so pure integration of a constant rate stays
    on the unit sphere to machine precision.
    """
    th = math.sqrt(wx * wx + wy * wy + wz * wz) * dt
    if th < 1e-12:
        # sinc expansion; keeps zero-rate propagation exactly identity
        h = 0.5 * dt
        dq = (1.0, wx * h, wy * h, wz * h)
    else:
        h = 0.5 * th
        s = math.sin(h) / (th / dt)
        dq = (math.cos(h), wx * s, wy * s, wz * s)
    return normalize(mul(q, dq))


def from_yaw(psi):
    h = 0.5 * psi
    return (math.cos(h), 0.0, 0.0, math.sin(h))


def yaw_of(q):
    w, x, y, z = q
    return math.atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))


def c33(q):
    # third diagonal entry of the rotation matrix: body-z projected on world-z
    w, x, y, z = q
    return 1.0 - 2.0 * (x * x + y * y)


def body_z_world(q):
    """Third column of R(q): the body z axis expressed in world frame."""
    w, x, y, z = q
    return (
        2.0 * (x * z + w * y),
        2.0 * (y * z - w * x),
        1.0 - 2.0 * (x * x + y * y),
    )


def tilt_of(q):
    """Angle between the body z axis and world vertical, in radians."""
    c = c33(q)
    if c > 1.0:
        c = 1.0
    elif c < -1.0:
        c = -1.0
    return math.acos(c)


def angle_between(qa, qb):
    """Magnitude of the rotation taking qa to qb, in radians."""
    d = abs(qa[0] * qb[0] + qa[1] * qb[1] + qa[2] * qb[2] + qa[3] * qb[3])
    if d > 1.0:
        d = 1.0
    return 2.0 * math.acos(d)


def to_euler(q):
    """(roll, pitch, yaw) in radians, ZYX convention."""
    w, x, y, z = q
    roll = math.atan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y))
    s = 2.0 * (w * y - z * x)
    if s > 1.0:
        s = 1.0
    elif s < -1.0:
        s = -1.0
    pitch = math.asin(s)
    yaw = math.atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))
    return (roll, pitch, yaw)


def from_euler(roll, pitch, yaw):
    cr, sr = math.cos(0.5 * roll), math.sin(0.5 * roll)
    cp, sp = math.cos(0.5 * pitch), math.sin(0.5 * pitch)
    cy, sy = math.cos(0.5 * yaw), math.sin(0.5 * yaw)
    return (
        cr * cp * cy + sr * sp * sy,
        sr * cp * cy - cr * sp * sy,
        cr * sp * cy + sr * cp * sy,
        cr * cp * sy - sr * sp * cy,
    )
