"""Mission layer: trajectory generators, incremental high-level
commands, and the landing sequence.

Two kinds of mission exist.  Trajectory missions replay an analytic
setpoint curve (hover, setpoint-switch, figure-eight, circle) with
velocity feedforward from the curve's derivative.  Command missions
hold a setpoint that mutates incrementally, either from a pre-written
script or from a live operator, at no more than the configured command
rate (default 2 Hz) and step size (default 0.05 m per axis) -- the
two-rate hierarchy: commands trickle in at operator speed while the
480 Hz loop flies the vehicle between them.

Setpoint altitude is always height above local terrain (that is the
quantity the estimator's ẑ tracks).  In terrain-relative mode that is
also the commanded semantic, which is what produces autonomous
obstacle clearance: the ToF sees the ground rise and the altitude loop
climbs with zero operator input.  Absolute mode is the same regulation
labeled against a flat reference; operator mode switches are honored
mid-flight.
"""

import math
from collections import deque
from dataclasses import dataclass, field, replace

ALTITUDE_MODES = ("terrain-relative", "absolute-altitude")


@dataclass
class MissionSetpoint:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.05          # m above local terrain
    yaw: float = 0.0
    mode: str = "terrain-relative"   # or "absolute-altitude"
    vx_ff: float = 0.0
    vy_ff: float = 0.0
    vz_ff: float = 0.0
    yaw_rate_ff: float = 0.0
    cut_thrust: bool = False


@dataclass
class HighLevelCommand:
    timestamp: float
    dx: float = 0.0
    dy: float = 0.0
    dz: float = 0.0
    dyaw: float = 0.0
    kind: str = "increment"   # increment | mode | land
    mode: str = ""            # target for kind == "mode"
    source: str = "scripted"  # scripted | operator


# ---------------------------------------------------------------- #
# trajectory generators

class HoverTrajectory:
    def __init__(self, x=0.0, y=0.0, z=0.05, yaw=0.0):
        self.sp = MissionSetpoint(x, y, z, yaw)

    def setpoint(self, t):
        return replace(self.sp)


class SetpointSwitch:
    """Two dwell points, constant-speed ramp between them.

    The vehicle holds point A for one leg period, then the setpoint
    glides to B at ramp_speed (with matching velocity feedforward) and
    dwells there, alternating.  The glide is what keeps peak vehicle
    speed at the configured ramp speed instead of an uncontrolled
    step-response surge.
    """

    def __init__(self, xa=-0.2, xb=0.2, y=0.0, z=0.05, yaw=0.0,
                 leg_period=3.0, ramp_speed=0.65):
        self.xa, self.xb = xa, xb
        self.y, self.z, self.yaw = y, z, yaw
        self.leg = leg_period
        self.speed = ramp_speed

    def setpoint(self, t):
        leg = int(t // self.leg)
        sp = MissionSetpoint(self.xa, self.y, self.z, self.yaw)
        if leg == 0:
            return sp
        frm = self.xa if leg % 2 == 1 else self.xb
        to = self.xb if leg % 2 == 1 else self.xa
        tau = t - leg * self.leg
        ramp_t = abs(to - frm) / self.speed
        if tau < ramp_t:
            s = 1.0 if to > frm else -1.0
            sp.x = frm + s * self.speed * tau
            sp.vx_ff = s * self.speed
        else:
            sp.x = to
        return sp


class Figure8:
    """Vertical-plane Lissajous: x = A sin(2πt/T), z = z0 + B sin(4πt/T)."""

    def __init__(self, amp_x=0.11, amp_z=0.05, period=7.0,
                 x0=0.0, y0=0.0, z0=0.10, yaw=0.0):
        self.ax, self.bz, self.T = amp_x, amp_z, period
        self.x0, self.y0, self.z0, self.yaw = x0, y0, z0, yaw

    def setpoint(self, t):
        w = 2.0 * math.pi / self.T
        return MissionSetpoint(
            x=self.x0 + self.ax * math.sin(w * t),
            y=self.y0,
            z=self.z0 + self.bz * math.sin(2.0 * w * t),
            yaw=self.yaw,
            vx_ff=self.ax * w * math.cos(w * t),
            vz_ff=self.bz * 2.0 * w * math.cos(2.0 * w * t))


class CircleTrajectory:
    """Horizontal circle with the yaw setpoint tracking the tangent.

    The tangent yaw is what couples heading rotation into the lateral
    estimate (flow is resolved into the world frame through estimated
    yaw), reproducing the larger tracking error seen on the circle.
    """

    def __init__(self, radius=0.09, lap_period=1.4, z=0.05,
                 cx=0.0, cy=0.0):
        self.r, self.T, self.z = radius, lap_period, z
        self.cx, self.cy = cx, cy

    def setpoint(self, t):
        w = 2.0 * math.pi / self.T
        th = w * t
        return MissionSetpoint(
            x=self.cx + self.r * math.cos(th),
            y=self.cy + self.r * math.sin(th),
            z=self.z,
            yaw=th + 0.5 * math.pi,
            vx_ff=-self.r * w * math.sin(th),
            vy_ff=self.r * w * math.cos(th),
            yaw_rate_ff=w)


class TrajectoryMission:
    """Adapter: an analytic trajectory as a mission (no command path)."""

    def __init__(self, traj):
        self.traj = traj
        self.applied = []
        self.start_landed = False

    def initial_setpoint(self):
        return self.traj.setpoint(0.0)

    def submit(self, cmd) -> bool:
        return False  # trajectory flights take no operator input

    def step(self, t, est, landed) -> MissionSetpoint:
        return self.traj.setpoint(t)


# ---------------------------------------------------------------- #
# incremental command missions

@dataclass
class CommandLimits:
    max_step: float = 0.05       # m per command per axis
    max_yaw_step: float = 0.3    # rad per command
    max_rate: float = 2.0        # Hz
    queue_depth: int = 32


class LandingSequence:
    """Controlled descent: sink toward the surface at a fixed rate,
    pausing whenever the estimated position has drifted off target,
    until ground contact reports landed."""

    def __init__(self, target_x, target_y, rate=0.05, hold_radius=0.05):
        self.tx, self.ty = target_x, target_y
        self.rate = rate
        self.hold_radius = hold_radius
        self.paused = False

    def step(self, sp, est, dt):
        off = math.hypot(est.x - self.tx, est.y - self.ty)
        self.paused = off > self.hold_radius
        if not self.paused:
            sp.z = max(sp.z - self.rate * dt, 0.0)
            sp.vz_ff = -self.rate if sp.z > 0.0 else 0.0


class CommandMission:
    """Setpoint mutated by increments from a script and/or an operator.

    Commands queue as they arrive and are consumed only at control-tick
    boundaries; at most one application per rate-cap interval, with
    everything pending at that moment coalesced into a single step and
    clamped to the per-command limit.  Mode and land commands apply
    immediately (they carry no setpoint jump).  Every application is
    recorded with its disposition, so an operator session can be
    persisted and replayed.
    """

    CUT_HEIGHT = 0.02  # m: thrust cut once landed with setpoint this low

    def __init__(self, script=(), limits: CommandLimits = None,
                 start=None, start_landed=True, interactive=True):
        self.limits = limits or CommandLimits()
        self.sp = start or MissionSetpoint(z=0.0)
        self.interactive = interactive
        self.script = sorted(script, key=lambda c: c.timestamp)
        self._next_script = 0
        self._pending = deque()
        self._last_applied_t = -1e9
        self._landing = None
        self._cut = False
        self.applied = []
        self.rejected = 0
        self.start_landed = start_landed

    def initial_setpoint(self):
        return replace(self.sp)

    def submit(self, cmd: HighLevelCommand) -> bool:
        """Queue an operator command; False when rejected (scripted
        replay, full queue, or unknown altitude mode).

        Scripted missions refuse live input: mixing operator deltas
        into a replay would break its determinism and leave the merged
        application impossible to attribute when the session is saved.
        """
        if not self.interactive:
            self.rejected += 1
            return False
        if cmd.kind == "mode" and cmd.mode not in ALTITUDE_MODES:
            self.rejected += 1
            return False
        if len(self._pending) >= self.limits.queue_depth:
            self.rejected += 1
            return False
        self._pending.append(cmd)
        return True

    def _apply_increment(self, t, dx, dy, dz, dyaw, n_coalesced, source):
        lim = self.limits.max_step
        ylim = self.limits.max_yaw_step
        cdx = -lim if dx < -lim else (lim if dx > lim else dx)
        cdy = -lim if dy < -lim else (lim if dy > lim else dy)
        cdz = -lim if dz < -lim else (lim if dz > lim else dz)
        cdyaw = -ylim if dyaw < -ylim else (ylim if dyaw > ylim else dyaw)
        clamped = (cdx != dx or cdy != dy or cdz != dz or cdyaw != dyaw)
        self.sp.x += cdx
        self.sp.y += cdy
        self.sp.z = max(self.sp.z + cdz, 0.0)
        self.sp.yaw += cdyaw
        self._last_applied_t = t
        self.applied.append({
            "t": t, "kind": "increment",
            "dx": cdx, "dy": cdy, "dz": cdz, "dyaw": cdyaw,
            "clamped": clamped, "coalesced": n_coalesced,
            "source": source})

    def step(self, t, est, landed) -> MissionSetpoint:
        # move due script entries into the queue
        while (self._next_script < len(self.script)
               and self.script[self._next_script].timestamp <= t + 1e-12):
            self._pending.append(self.script[self._next_script])
            self._next_script += 1

        # immediate commands: mode switches and landing arm
        keep = deque()
        while self._pending:
            cmd = self._pending.popleft()
            if cmd.kind == "mode":
                self.sp.mode = cmd.mode
                self.applied.append({"t": t, "kind": "mode",
                                     "mode": cmd.mode, "source": cmd.source})
            elif cmd.kind == "land":
                self._landing = LandingSequence(self.sp.x, self.sp.y)
                self.applied.append({"t": t, "kind": "land",
                                     "source": cmd.source})
            else:
                keep.append(cmd)
        self._pending = keep

        # rate-capped increment application, over-rate load coalesced
        interval = 1.0 / self.limits.max_rate
        if self._pending and t - self._last_applied_t >= interval - 1e-9:
            dx = dy = dz = dyaw = 0.0
            n = 0
            src = "scripted"
            while self._pending:
                cmd = self._pending.popleft()
                dx += cmd.dx
                dy += cmd.dy
                dz += cmd.dz
                dyaw += cmd.dyaw
                src = cmd.source
                n += 1
            self._apply_increment(t, dx, dy, dz, dyaw, n, src)

        dt = 1.0 / 480.0
        self.sp.vz_ff = 0.0
        if self._landing is not None and not self._cut:
            self._landing.step(self.sp, est, dt)

        if landed and self.sp.z <= self.CUT_HEIGHT:
            self._cut = True
        elif self._cut and self.sp.z > self.CUT_HEIGHT:
            # a fresh climb command after touchdown re-arms flight
            self._cut = False
            self._landing = None
        self.sp.cut_thrust = self._cut

        return replace(self.sp)


# ---------------------------------------------------------------- #
# scripted flights

def mission30_entries():
    """The 30-s demonstration: takeoff, traverse the curved obstacle
    (slowly enough that terrain-relative altitude holds within its
    band), ascend, descend, and land on the flower disk."""
    e = [HighLevelCommand(0.0, dz=0.05),
         HighLevelCommand(0.5, dz=0.05)]          # takeoff to 0.10 m
    t = 2.0
    for _ in range(4):                            # to the bump foot
        e.append(HighLevelCommand(t, dx=0.05))
        t += 0.5
    for _ in range(12):                           # slow over the bump
        e.append(HighLevelCommand(t, dx=0.025))
        t += 0.5
    for _ in range(6):                            # on to the flower
        e.append(HighLevelCommand(t, dx=0.05))
        t += 0.5
    e.append(HighLevelCommand(14.0, dz=0.05))     # ascend
    e.append(HighLevelCommand(16.0, dz=-0.05))    # descend
    e.append(HighLevelCommand(18.0, kind="land"))
    return e


def mission15_entries():
    """Short flat-ground sortie sized to the 15.6 s onboard log budget."""
    e = [HighLevelCommand(0.0, dz=0.05),
         HighLevelCommand(0.5, dz=0.05)]
    t = 2.0
    for _ in range(8):
        e.append(HighLevelCommand(t, dx=0.05))
        t += 0.5
    e.append(HighLevelCommand(8.0, kind="land"))
    return e


_BUILTIN_SCRIPTS = {
    "mission30": mission30_entries,
    "mission15": mission15_entries,
}


def build_mission(spec: dict):
    """Construct a mission object from its serializable description."""
    kind = spec.get("kind", "hover")
    args = {k: v for k, v in spec.items()
            if k not in ("kind", "entries", "script", "mode")}
    if kind == "hover":
        return TrajectoryMission(HoverTrajectory(**args))
    if kind == "setpoint-switch":
        return TrajectoryMission(SetpointSwitch(**args))
    if kind == "figure-eight":
        return TrajectoryMission(Figure8(**args))
    if kind == "circle":
        return TrajectoryMission(CircleTrajectory(**args))
    if kind in ("script", "interactive"):
        mode0 = spec.get("mode", "terrain-relative")
        if mode0 not in ALTITUDE_MODES:
            raise ValueError(f"unknown altitude mode {mode0!r}")
        if kind == "interactive":
            entries = ()
        elif "script" in spec:
            entries = _BUILTIN_SCRIPTS[spec["script"]]()
        else:
            entries = [HighLevelCommand(
                timestamp=d["t"], dx=d.get("dx", 0.0), dy=d.get("dy", 0.0),
                dz=d.get("dz", 0.0), dyaw=d.get("dyaw", 0.0),
                kind=d.get("kind", "increment"), mode=d.get("mode", ""))
                for d in spec.get("entries", ())]
            for c in entries:
                if c.kind == "mode" and c.mode not in ALTITUDE_MODES:
                    raise ValueError(f"unknown altitude mode {c.mode!r}")
        start = MissionSetpoint(z=0.0, mode=mode0)
        return CommandMission(entries, start=start, start_landed=True,
                              interactive=(kind == "interactive"))
    raise ValueError(f"unknown mission kind {kind!r}")
