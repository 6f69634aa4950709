"""Flight metrics computed from a log: tracking RMS against the
setpoint, estimation RMS against ground truth, dead-reckoning drift,
peak speed, and path length.

All accumulation uses math.fsum so the numbers do not depend on row
count in surprising ways.  RMS helpers raise on empty windows instead
of returning NaN.
"""

import math
from dataclasses import dataclass, asdict

from . import quat
from .logbook import _IDX


def _i(name):
    return _IDX[name]


def rms(values) -> float:
    vals = list(values)
    if not vals:
        raise ValueError("rms of an empty window")
    return math.sqrt(math.fsum(v * v for v in vals) / len(vals))


def window(log, t0=0.0, t1=None):
    """Row indices with t0 <= t <= t1 (inclusive, half-open if t1 None)."""
    ts = log.column("t")
    if t1 is None:
        t1 = ts[-1]
    idx = [k for k, t in enumerate(ts) if t0 - 1e-12 <= t <= t1 + 1e-12]
    if not idx:
        raise ValueError(f"no log rows in [{t0}, {t1}]")
    return idx


def tracking_rms(log, t0=0.0, t1=None):
    """Lateral / altitude tracking error RMS, in cm.

    Lateral error is horizontal distance to the setpoint; altitude
    error is height above local terrain minus commanded height, which
    is what the vehicle actually regulates.
    """
    idx = window(log, t0, t1)
    lat, alt = [], []
    for k in idx:
        r = log.rows[k]
        g = lambda n: r[_i(n)]
        lat.append(math.hypot(g("px") - g("sp_x"), g("py") - g("sp_y")))
        alt.append((g("pz") - g("h_terr")) - g("sp_z"))
    return {"lateral_cm": rms(lat) * 100.0,
            "altitude_cm": rms(alt) * 100.0}


def estimation_rms(log, t0=0.0, t1=None):
    """Estimator error RMS vs truth: attitude (deg), body rates
    (deg/s), height (cm), lateral velocity (cm/s)."""
    idx = window(log, t0, t1)
    att, rate, pos, vel = [], [], [], []
    for k in idx:
        r = log.rows[k]
        g = lambda n: r[_i(n)]
        qt = (g("qw"), g("qx"), g("qy"), g("qz"))
        qe = (g("est_qw"), g("est_qx"), g("est_qy"), g("est_qz"))
        att.append(math.degrees(quat.angle_between(qt, qe)))
        rate.append(math.degrees(math.sqrt(
            (g("wx") - g("est_wx")) ** 2
            + (g("wy") - g("est_wy")) ** 2
            + (g("wz") - g("est_wz")) ** 2)))
        pos.append(((g("pz") - g("h_terr")) - g("est_z")) * 100.0)
        vel.append(math.hypot(g("vx") - g("est_vx"),
                              g("vy") - g("est_vy")) * 100.0)
    return {"attitude_deg": rms(att), "rate_dps": rms(rate),
            "height_cm": rms(pos), "velocity_cms": rms(vel)}


def drift_cm(log) -> float:
    """Final dead-reckoned lateral position error vs truth, in cm."""
    r = log.rows[-1]
    return math.hypot(r[_i("est_x")] - r[_i("px")],
                      r[_i("est_y")] - r[_i("py")]) * 100.0


def max_lateral_speed_cms(log, t0=0.0, t1=None) -> float:
    idx = window(log, t0, t1)
    return max(math.hypot(log.rows[k][_i("vx")],
                          log.rows[k][_i("vy")]) for k in idx) * 100.0


def path_length_m(log) -> float:
    total = 0.0
    px, py, pz = log.column("px"), log.column("py"), log.column("pz")
    for k in range(1, len(px)):
        total += math.sqrt((px[k] - px[k - 1]) ** 2
                           + (py[k] - py[k - 1]) ** 2
                           + (pz[k] - pz[k - 1]) ** 2)
    return total


def forward_progress_m(log) -> float:
    px = log.column("px")
    return max(px) - px[0]


def touchdown_error_cm(log, tx, ty) -> float:
    """Distance from the final resting point to a target, in cm."""
    r = log.rows[-1]
    return math.hypot(r[_i("px")] - tx, r[_i("py")] - ty) * 100.0


def height_error_over_region_cm(log, x0, x1) -> float:
    """Max |height-above-terrain - setpoint| while truth x in [x0, x1]."""
    worst = 0.0
    seen = False
    for r in log.rows:
        if x0 <= r[_i("px")] <= x1 and not r[_i("landed")]:
            seen = True
            err = abs((r[_i("pz")] - r[_i("h_terr")]) - r[_i("sp_z")])
            worst = max(worst, err)
    if not seen:
        raise ValueError(f"vehicle never crossed x in [{x0}, {x1}]")
    return worst * 100.0


@dataclass
class MetricsReport:
    duration_s: float
    rows: int
    tracking_lateral_cm: float
    tracking_altitude_cm: float
    est_attitude_deg: float
    est_rate_dps: float
    est_height_cm: float
    est_velocity_cms: float
    drift_cm: float
    max_lateral_speed_cms: float
    path_length_m: float
    controller_faults: int = 0

    def to_dict(self):
        return asdict(self)


def evaluate_acceptance(acceptance: dict, log, rep: MetricsReport):
    """Check a report against configured thresholds.

    Returns a list of {name, value, limit, ok} rows; auxiliary keys
    (targets, regions) parameterize checks and are not thresholds
    themselves.
    """
    rows = []

    def add(name, value, limit, ok):
        rows.append({"name": name, "value": value, "limit": limit,
                     "ok": bool(ok)})

    for name, limit in acceptance.items():
        if name == "lateral_rms_cm":
            v = rep.tracking_lateral_cm
            add(name, v, limit, v <= limit)
        elif name == "altitude_rms_cm":
            v = rep.tracking_altitude_cm
            add(name, v, limit, v <= limit)
        elif name == "peak_speed_min_cms":
            v = rep.max_lateral_speed_cms
            add(name, v, limit, v >= limit)
        elif name == "peak_speed_max_cms":
            v = rep.max_lateral_speed_cms
            add(name, v, limit, v <= limit)
        elif name == "drift_cm":
            v = rep.drift_cm
            add(name, v, limit, v <= limit)
        elif name == "touchdown_cm":
            tx, ty = acceptance.get("touchdown_target", (0.80, 0.0))
            if log.rows[-1][_i("landed")]:
                v = touchdown_error_cm(log, tx, ty)
            else:
                v = float("inf")
            add(name, v, limit, v <= limit)
        elif name == "course_min_m":
            v = path_length_m(log)
            add(name, v, limit, v >= limit)
        elif name == "obstacle_height_err_cm":
            x0, x1 = acceptance.get("obstacle_region", (0.20, 0.50))
            try:
                v = height_error_over_region_cm(log, x0, x1)
            except ValueError:
                v = float("inf")
            add(name, v, limit, v <= limit)
        elif name in ("touchdown_target", "obstacle_region"):
            continue
        else:
            add(name, float("nan"), limit, False)
    return rows


def report(log, settle: float = 0.0) -> MetricsReport:
    """Full metrics over the log, skipping the first `settle` seconds."""
    trk = tracking_rms(log, settle)
    est = estimation_rms(log, settle)
    ts = log.column("t")
    return MetricsReport(
        duration_s=ts[-1] - ts[0],
        rows=len(log),
        tracking_lateral_cm=trk["lateral_cm"],
        tracking_altitude_cm=trk["altitude_cm"],
        est_attitude_deg=est["attitude_deg"],
        est_rate_dps=est["rate_dps"],
        est_height_cm=est["height_cm"],
        est_velocity_cms=est["velocity_cms"],
        drift_cm=drift_cm(log),
        max_lateral_speed_cms=max_lateral_speed_cms(log),
        path_length_m=path_length_m(log),
        controller_faults=int(log.meta.get("controller_faults", 0)),
    )
