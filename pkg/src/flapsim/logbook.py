"""Flight log: one CSV row per 480 Hz tick, plus a JSON metadata
sidecar carrying the full config, seed, and estimator initialization
so a log is replayable bit-for-bit.

Column order is stable (replay and the determinism hash depend on it).
Floats are written with %.17g so they round-trip exactly; sensor
columns are blank on ticks where that sensor was not scheduled.
"""

import hashlib
import json
import os

# 15.6 s at 480 Hz — the target flash buffer on the flight MCU.
BUFFER_ROWS = 7488

COLUMNS = (
    "t",
    "px", "py", "pz", "vx", "vy", "vz",
    "qw", "qx", "qy", "qz",
    "wx", "wy", "wz",
    "landed", "h_terr",
    "imu_gx", "imu_gy", "imu_gz",
    "imu_ax", "imu_ay", "imu_az",
    "tof_d", "tof_valid",
    "flow_x", "flow_y", "flow_q",
    "est_qw", "est_qx", "est_qy", "est_qz",
    "est_wx", "est_wy", "est_wz",
    "est_z", "est_vz", "est_vx", "est_vy", "est_x", "est_y",
    "cov_z", "cov_vz", "cov_vx", "cov_vy",
    "sp_x", "sp_y", "sp_z", "sp_yaw", "sp_mode", "sp_cut",
    "cmd_thrust", "cmd_tx", "cmd_ty", "cmd_tz", "cmd_fault",
)

_IDX = {name: i for i, name in enumerate(COLUMNS)}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    return format(float(v), ".17g")


class FlightLog:
    """Append-only tick log with stable schema and content hash."""

    def __init__(self, meta=None):
        self.meta = dict(meta or {})
        self.rows = []

    def __len__(self):
        return len(self.rows)

    def append(self, row):
        if len(row) != len(COLUMNS):
            raise ValueError(
                f"row has {len(row)} fields, schema has {len(COLUMNS)}")
        self.rows.append(tuple(row))

    def column(self, name):
        i = _IDX[name]
        return [r[i] for r in self.rows]

    def value(self, k, name):
        return self.rows[k][_IDX[name]]

    def render(self) -> str:
        lines = [",".join(COLUMNS)]
        for r in self.rows:
            lines.append(",".join(_fmt(v) for v in r))
        return "\n".join(lines) + "\n"

    def sha256(self) -> str:
        return hashlib.sha256(self.render().encode()).hexdigest()

    def save(self, path):
        path = os.fspath(path)
        with open(path, "w") as f:
            f.write(self.render())
        with open(path + ".meta.json", "w") as f:
            json.dump(self.meta, f, indent=1, sort_keys=True)
        return path

    @classmethod
    def load(cls, path):
        path = os.fspath(path)
        log = cls()
        with open(path) as f:
            header = f.readline().rstrip("\n").split(",")
            if tuple(header) != COLUMNS:
                raise ValueError(f"{path}: unexpected log columns")
            for line in f:
                cells = line.rstrip("\n").split(",")
                log.rows.append(tuple(
                    None if c == "" else float(c) for c in cells))
        meta_path = path + ".meta.json"
        if os.path.exists(meta_path):
            with open(meta_path) as f:
                log.meta = json.load(f)
        return log
