"""Closed-loop experiment runner.

One deterministic fixed-step loop wires dynamics, sensors, estimator,
controller, and mission together.  Tick k at t = k/rate:

  1. sensors sample the current truth (thrust still the previous
     command — zero-order hold),
  2. the estimator consumes the sensor frame and that same held thrust,
  3. the mission layer emits the setpoint,
  4. the controller computes the new command,
  5. the row is logged, then
  6. truth integrates forward one step under the new command.

Identical (config, seed) therefore reproduce identical logs
bit-for-bit, and a log contains everything needed to re-run the
estimator open-loop (`replay_estimator`).
"""

import math
from dataclasses import replace

from . import metrics, quat
from .config import (SimConfig, VERSION, build_terrain, config_hash,
                     to_dict)
from .controller import CascadedController
from .dynamics import (VehicleState, accel_world, resolve_ground_contact,
                       step_dynamics)
from .estimator import CascadedEstimator, EstimatorConfig
from .logbook import COLUMNS, FlightLog
from .mission import build_mission
from .sensors import FlowSample, ImuSample, SensorFrame, SensorSuite, TofSample

_MODE_CODE = {"terrain-relative": 1, "absolute-altitude": 0}


class SimulationError(RuntimeError):
    """Loop aborted; carries the offending tick."""

    def __init__(self, tick, t, cause):
        self.tick = tick
        self.t = t
        super().__init__(f"aborted at tick {tick} (t={t:.6f} s): {cause}")


class Simulation:
    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        cfg.noise.rng_seed = cfg.seed
        self.params = cfg.vehicle
        self.params.validate()
        self.rate = cfg.rates.control
        self.dt = 1.0 / self.rate
        self.n_ticks = int(round(cfg.duration * self.rate))
        self.terrain = build_terrain(cfg.terrain)
        self.mission = build_mission(cfg.mission)

        sp0 = self.mission.initial_setpoint()
        landed0 = self.mission.start_landed
        h0 = self.terrain.height(sp0.x, sp0.y)
        q0 = quat.from_yaw(sp0.yaw)
        pz0 = h0 if landed0 else h0 + sp0.z
        self.truth = VehicleState(
            px=sp0.x, py=sp0.y, pz=pz0,
            qw=q0[0], qx=q0[1], qy=q0[2], qz=q0[3],
            landed=landed0)

        self.suite = SensorSuite(
            cfg.noise, self.terrain,
            imu_rate=cfg.rates.imu, tof_rate=cfg.rates.tof,
            flow_rate=cfg.rates.flow,
            flap_frequency=cfg.vehicle.flap_frequency,
            gravity=cfg.vehicle.gravity)

        if cfg.estimator.seed_bias_from_calibration:
            b0 = self.suite.calibrate_gyro_bias(cfg.estimator.calib_duration)
        else:
            b0 = (0.0, 0.0, 0.0)
        z0 = pz0 - h0
        self.estimator = CascadedEstimator(cfg.estimator, cfg.precision)
        self.estimator.initialize(q=q0, z=z0, x=sp0.x, y=sp0.y, bias=b0)
        self.controller = CascadedController(cfg.controller, cfg.precision)

        self.F_prev = 0.0 if landed0 else self.params.weight
        self._mode_prev = _MODE_CODE.get(sp0.mode, 1)
        self.k = 0
        self.log = FlightLog(meta={
            "version": VERSION,
            "config": to_dict(cfg),
            "config_hash": config_hash(cfg),
            "seed": cfg.seed,
            "precision": cfg.precision,
            "preset": cfg.name,
            "initial_thrust": self.F_prev,
            "initial_mode": self._mode_prev,
            "estimator_init": {
                "q": [q0[0], q0[1], q0[2], q0[3]],
                "z": z0, "vz": 0.0, "vx": 0.0, "vy": 0.0,
                "x": sp0.x, "y": sp0.y,
                "bias": [b0[0], b0[1], b0[2]]},
        })

    # -- one control tick -------------------------------------------------

    def step(self):
        t = self.k / self.rate
        truth = self.truth
        try:
            aw = accel_world(truth, self.F_prev, self.params)
            frame = self.suite.poll(
                truth, aw, self.F_prev / self.params.max_total_thrust, t)
            est = self.estimator.tick(
                frame, self.F_prev, t, self.dt,
                fuse_range=bool(self._mode_prev))
            sp = self.mission.step(t, est, truth.landed)
            cmd = self.controller.tick(est, sp, self.dt, t)
            self._log_row(t, truth, frame, est, sp, cmd)
            nxt = step_dynamics(truth, cmd.thrust, cmd.torque,
                                self.dt, self.params)
            self.truth = resolve_ground_contact(nxt, self.terrain)
        except (ValueError, FloatingPointError) as e:
            raise SimulationError(self.k, t, e) from e
        self.F_prev = float(cmd.thrust)
        self._mode_prev = _MODE_CODE.get(sp.mode, 1)
        self.k += 1
        return est, sp, cmd

    def run(self):
        while self.k < self.n_ticks:
            self.step()
        self.finalize()
        return self.log

    def finalize(self):
        self.log.meta.update({
            "ticks": self.k,
            "controller_faults": self.controller.fault_count,
            "estimator_dropped_samples": self.estimator.dropped_samples,
            "estimator_cov_reprojections": self.estimator.cov_reprojections,
            "commands_applied": list(getattr(self.mission, "applied", ())),
            "commands_rejected": getattr(self.mission, "rejected", 0),
            "log_hash": None,  # filled after rows are final
        })
        self.log.meta["log_hash"] = self.log.sha256()
        return self.log.meta

    def _log_row(self, t, s, frame, est, sp, cmd):
        imu, tof, flow = frame.imu, frame.tof, frame.flow
        row = [
            t,
            s.px, s.py, s.pz, s.vx, s.vy, s.vz,
            s.qw, s.qx, s.qy, s.qz,
            s.wx, s.wy, s.wz,
            int(s.landed), self.terrain.height(s.px, s.py),
        ]
        if imu is not None:
            row += [imu.gyro[0], imu.gyro[1], imu.gyro[2],
                    imu.accel[0], imu.accel[1], imu.accel[2]]
        else:
            row += [None] * 6
        if tof is not None:
            row += [tof.distance, int(tof.valid)]
        else:
            row += [None, None]
        if flow is not None:
            row += [flow.flow[0], flow.flow[1], flow.quality]
        else:
            row += [None, None, None]
        row += [
            est.q[0], est.q[1], est.q[2], est.q[3],
            est.omega[0], est.omega[1], est.omega[2],
            est.z, est.vz, est.vx, est.vy, est.x, est.y,
            est.alt_cov[0], est.alt_cov[2],
            est.lat_cov_x[0], est.lat_cov_y[0],
            sp.x, sp.y, sp.z, sp.yaw,
            _MODE_CODE.get(sp.mode, 1), int(sp.cut_thrust),
            cmd.thrust, cmd.torque[0], cmd.torque[1], cmd.torque[2],
            int(cmd.fault),
        ]
        self.log.append(row)


def run_experiment(cfg: SimConfig, out_dir=None):
    """Run one configured experiment; returns (FlightLog, MetricsReport).

    With out_dir set, writes <name>_seed<seed>.csv plus its metadata
    sidecar there.
    """
    sim = Simulation(cfg)
    log = sim.run()
    rep = metrics.report(log)
    log.meta["metrics"] = rep.to_dict()
    if out_dir is not None:
        import os
        os.makedirs(out_dir, exist_ok=True)
        log.save(os.path.join(
            out_dir, f"{cfg.name}_seed{cfg.seed}.csv"))
    return log, rep


# -- open-loop estimator replay -----------------------------------------


def _frame_from_row(log, k):
    r = log.rows[k]
    g = lambda n: log.value(k, n)
    t = g("t")
    frame = SensorFrame()
    if g("imu_gx") is not None:
        frame.imu = ImuSample(t, (g("imu_gx"), g("imu_gy"), g("imu_gz")),
                              (g("imu_ax"), g("imu_ay"), g("imu_az")))
    if g("tof_d") is not None:
        frame.tof = TofSample(t, g("tof_d"), bool(g("tof_valid")))
    if g("flow_x") is not None:
        frame.flow = FlowSample(t, (g("flow_x"), g("flow_y")), g("flow_q"))
    return frame


def replay_estimator(log, gains: EstimatorConfig = None, precision=None):
    """Re-run only the estimator over a log's recorded sensor stream.

    Open loop: thrust and sensor rows come from the log, nothing is
    re-simulated.  With the original gains the estimates match the
    logged ones bit-for-bit; alternative gains enable offline tuning.
    Returns the per-tick estimate snapshots; see replay_matches_log
    and replay_estimation_rms for comparisons.
    """
    if not log.rows:
        raise ValueError("empty log")
    if log.value(0, "imu_gx") is None:
        raise ValueError("log has no sensor rows to replay")
    meta = log.meta
    init = meta.get("estimator_init")
    if init is None:
        raise ValueError("log metadata lacks estimator_init")
    cfg_dict = meta.get("config", {})
    if gains is None:
        est_fields = cfg_dict.get("estimator", {})
        gains = EstimatorConfig(**est_fields)
    if precision is None:
        precision = meta.get("precision", "double")

    est = CascadedEstimator(gains, precision)
    bias = init["bias"] if gains.seed_bias_from_calibration else (0.0,) * 3
    est.initialize(q=tuple(init["q"]), z=init["z"], vz=init["vz"],
                   vx=init["vx"], vy=init["vy"], x=init["x"], y=init["y"],
                   bias=tuple(bias))

    rate = cfg_dict.get("rates", {}).get("control", 480.0)
    dt = 1.0 / rate
    F = meta.get("initial_thrust", 0.0)
    mode = meta.get("initial_mode", 1)
    out = []
    for k in range(len(log.rows)):
        t = log.value(k, "t")
        frame = _frame_from_row(log, k)
        snap = est.tick(frame, F, t, dt, fuse_range=bool(mode))
        out.append(snap)
        F = log.value(k, "cmd_thrust")
        mode = log.value(k, "sp_mode")
    return out


def replay_matches_log(log, estimates) -> bool:
    """True when replayed estimates equal the logged ones exactly."""
    for k, snap in enumerate(estimates):
        logged = (log.value(k, "est_qw"), log.value(k, "est_qx"),
                  log.value(k, "est_qy"), log.value(k, "est_qz"),
                  log.value(k, "est_z"), log.value(k, "est_vz"),
                  log.value(k, "est_vx"), log.value(k, "est_vy"),
                  log.value(k, "est_x"), log.value(k, "est_y"))
        got = (snap.q[0], snap.q[1], snap.q[2], snap.q[3],
               snap.z, snap.vz, snap.vx, snap.vy, snap.x, snap.y)
        for a, b in zip(logged, got):
            if float(a) != float(b):
                return False
    return True


def replay_estimation_rms(log, estimates, t0=0.0, t1=None):
    """Estimation-error RMS of replayed estimates against logged truth."""
    idx = metrics.window(log, t0, t1)
    att, rate, pos, vel = [], [], [], []
    for k in idx:
        g = lambda n: log.value(k, n)
        snap = estimates[k]
        qt = (g("qw"), g("qx"), g("qy"), g("qz"))
        att.append(math.degrees(quat.angle_between(qt, snap.q)))
        rate.append(math.degrees(math.sqrt(
            (g("wx") - snap.omega[0]) ** 2
            + (g("wy") - snap.omega[1]) ** 2
            + (g("wz") - snap.omega[2]) ** 2)))
        pos.append(((g("pz") - g("h_terr")) - snap.z) * 100.0)
        vel.append(math.hypot(g("vx") - snap.vx, g("vy") - snap.vy) * 100.0)
    return {"attitude_deg": metrics.rms(att),
            "rate_dps": metrics.rms(rate),
            "height_cm": metrics.rms(pos),
            "velocity_cms": metrics.rms(vel)}


# -- dual-precision comparison ------------------------------------------


def compare_precision(cfg: SimConfig):
    """Run the identical experiment in double and single precision with
    the same seed; report max/RMS divergence of estimates and commands.
    """
    logs = {}
    for mode in ("double", "single"):
        c = replace_precision(cfg, mode)
        logs[mode], _ = run_experiment(c)
    a, b = logs["double"], logs["single"]
    n = min(len(a), len(b))
    dpos, datt, dcmd = [], [], []
    for k in range(n):
        ga = lambda nme: a.value(k, nme)
        gb = lambda nme: b.value(k, nme)
        dpos.append(math.sqrt(
            (ga("est_x") - gb("est_x")) ** 2
            + (ga("est_y") - gb("est_y")) ** 2
            + (ga("est_z") - gb("est_z")) ** 2))
        qa = (ga("est_qw"), ga("est_qx"), ga("est_qy"), ga("est_qz"))
        qb = (gb("est_qw"), gb("est_qx"), gb("est_qy"), gb("est_qz"))
        datt.append(math.degrees(quat.angle_between(qa, qb)))
        dcmd.append(abs(ga("cmd_thrust") - gb("cmd_thrust")))
    if not dpos:
        return {"ticks": 0, "max_position_cm": 0.0, "rms_position_cm": 0.0,
                "max_attitude_deg": 0.0, "rms_attitude_deg": 0.0,
                "max_thrust_N": 0.0}
    return {
        "ticks": n,
        "max_position_cm": max(dpos) * 100.0,
        "rms_position_cm": metrics.rms(dpos) * 100.0,
        "max_attitude_deg": max(datt),
        "rms_attitude_deg": metrics.rms(datt),
        "max_thrust_N": max(dcmd),
    }


def replace_precision(cfg: SimConfig, mode: str) -> SimConfig:
    import copy
    c = copy.deepcopy(cfg)
    c.precision = mode
    return c
