"""Experiment configuration: one serializable tree covering vehicle,
noise, rates, filter and controller tuning, mission, and terrain.

Every run embeds the full configuration dict and its SHA-256 hash in
the log metadata, so any flight is reproducible from its log alone.
The named presets mirror the flight experiments: hover5, hover10,
setpoint40, figure8, circle18, mission30s, mission15s.  Calibrated
noise magnitudes and filter tuning live here (and in the config files
runs dump), not scattered through the code.
"""

import hashlib
import json
import os
from dataclasses import dataclass, field, asdict, fields, is_dataclass

import yaml

from .dynamics import VehicleParams
from .sensors import NoiseConfig
from .estimator import EstimatorConfig
from .controller import ControllerGains
from .environment import TerrainField, Bump, Flower

VERSION = "0.1.0"


@dataclass
class RatesConfig:
    imu: float = 480.0
    tof: float = 240.0
    flow: float = 120.0
    control: float = 480.0

    def validate(self):
        for f_ in fields(self):
            if getattr(self, f_.name) <= 0.0:
                raise ValueError(f"rate {f_.name} must be positive")


@dataclass
class SimConfig:
    name: str = "custom"
    duration: float = 12.0
    seed: int = 1
    precision: str = "double"
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    rates: RatesConfig = field(default_factory=RatesConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    controller: ControllerGains = field(default_factory=ControllerGains)
    mission: dict = field(default_factory=lambda: {"kind": "hover"})
    terrain: dict = field(default_factory=lambda: {"kind": "flat"})
    acceptance: dict = field(default_factory=dict)


def to_dict(cfg: SimConfig) -> dict:
    d = asdict(cfg)

    def listify(x):
        if isinstance(x, tuple):
            return [listify(v) for v in x]
        if isinstance(x, dict):
            return {k: listify(v) for k, v in x.items()}
        if isinstance(x, list):
            return [listify(v) for v in x]
        return x

    return listify(d)


def config_hash(cfg: SimConfig) -> str:
    blob = json.dumps(to_dict(cfg), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


class ConfigError(ValueError):
    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("invalid config:\n  " + "\n  ".join(self.errors))


_TUPLE_FIELDS = {"inertia", "linear_drag", "gyro_bias", "bounds"}


def _fill(cls, data: dict, path: str, errors: list):
    known = {f_.name: f_ for f_ in fields(cls)}
    kwargs = {}
    for key, val in data.items():
        if key not in known:
            errors.append(f"{path}.{key}: unknown field")
            continue
        if key in _TUPLE_FIELDS and isinstance(val, list):
            val = tuple(tuple(v) if isinstance(v, list) else v for v in val)
        kwargs[key] = val
    try:
        return cls(**kwargs)
    except TypeError as e:
        errors.append(f"{path}: {e}")
        return cls()


_SECTIONS = {
    "vehicle": VehicleParams,
    "noise": NoiseConfig,
    "rates": RatesConfig,
    "estimator": EstimatorConfig,
    "controller": ControllerGains,
}


def from_dict(data: dict) -> SimConfig:
    """Build a SimConfig, collecting every validation error at once."""
    errors = []
    cfg = SimConfig()
    for key, val in data.items():
        if key in _SECTIONS:
            if not isinstance(val, dict):
                errors.append(f"{key}: expected a mapping")
                continue
            setattr(cfg, key, _fill(_SECTIONS[key], val, key, errors))
        elif key in ("mission", "terrain", "acceptance"):
            if not isinstance(val, dict):
                errors.append(f"{key}: expected a mapping")
            else:
                setattr(cfg, key, val)
        elif key in ("name", "precision"):
            setattr(cfg, key, str(val))
        elif key == "duration":
            setattr(cfg, key, float(val))
        elif key == "seed":
            setattr(cfg, key, int(val))
        else:
            errors.append(f"{key}: unknown section")
    if cfg.precision not in ("single", "double"):
        errors.append(f"precision: {cfg.precision!r} is not single|double")
    if cfg.duration <= 0.0:
        errors.append("duration: must be positive")
    try:
        cfg.vehicle.validate()
    except ValueError as e:
        errors.append(f"vehicle: {e}")
    try:
        cfg.noise.validate()
    except ValueError as e:
        errors.append(f"noise: {e}")
    try:
        cfg.rates.validate()
    except ValueError as e:
        errors.append(f"rates: {e}")
    try:
        cfg.controller.validate()
    except ValueError as e:
        errors.append(f"controller: {e}")
    if cfg.mission.get("kind", "hover") not in (
            "hover", "setpoint-switch", "figure-eight", "circle",
            "script", "interactive"):
        errors.append(f"mission.kind: unknown {cfg.mission.get('kind')!r}")
    if errors:
        raise ConfigError(errors)
    return cfg


def load_config(path) -> SimConfig:
    with open(path) as f:
        data = yaml.safe_load(f)
    if not isinstance(data, dict):
        raise ConfigError([f"{path}: not a config mapping"])
    return from_dict(data)


def save_config(cfg: SimConfig, path):
    with open(path, "w") as f:
        yaml.safe_dump(to_dict(cfg), f, sort_keys=False)


def build_terrain(spec: dict) -> TerrainField:
    kind = spec.get("kind")
    if kind == "flat":
        return TerrainField()
    if kind == "course":
        return TerrainField(
            bumps=(Bump(cx=0.35, cy=0.0, peak=0.06, radius=0.15),),
            flowers=(Flower(cx=0.80, cy=0.0, radius=0.05,
                            stem_height=0.04),))
    bumps = tuple(Bump(**b) for b in spec.get("bumps", ()))
    flowers = tuple(Flower(**f) for f in spec.get("flowers", ()))
    bounds = spec.get("bounds")
    if bounds is not None:
        bounds = tuple(tuple(b) for b in bounds)
        return TerrainField(bumps, flowers, bounds)
    return TerrainField(bumps, flowers)


# ---------------------------------------------------------------- #
# presets: one per flight experiment

def _calibrated_noise(seed: int) -> NoiseConfig:
    return NoiseConfig(
        gyro_noise_density=1.5e-4,
        gyro_bias=(0.008, -0.005, 0.004),
        accel_noise_density=2.5e-3,
        vibration_amplitude=0.35,
        tof_noise_std=6.0e-3,
        flow_noise_std=0.5,
        flow_quantize=True,
        rng_seed=seed)


def _base(name, seed, precision, duration) -> SimConfig:
    return SimConfig(name=name, duration=duration, seed=seed,
                     precision=precision, noise=_calibrated_noise(seed))


def _hover5(seed, precision):
    cfg = _base("hover5", seed, precision, 12.0)
    cfg.mission = {"kind": "hover", "x": 0.0, "y": 0.0, "z": 0.05}
    cfg.acceptance = {"lateral_rms_cm": 4.9, "altitude_rms_cm": 0.5}
    return cfg


def _hover10(seed, precision):
    cfg = _base("hover10", seed, precision, 12.0)
    cfg.mission = {"kind": "hover", "x": 0.0, "y": 0.0, "z": 0.10}
    return cfg


def _setpoint40(seed, precision):
    cfg = _base("setpoint40", seed, precision, 12.0)
    cfg.mission = {"kind": "setpoint-switch", "xa": -0.2, "xb": 0.2,
                   "z": 0.05, "leg_period": 3.0, "ramp_speed": 0.65}
    cfg.acceptance = {"lateral_rms_cm": 6.8,
                      "peak_speed_min_cms": 40.0,
                      "peak_speed_max_cms": 90.0}
    return cfg


def _figure8(seed, precision):
    cfg = _base("figure8", seed, precision, 7.0)
    cfg.mission = {"kind": "figure-eight", "amp_x": 0.11, "amp_z": 0.05,
                   "period": 7.0, "z0": 0.10}
    cfg.acceptance = {"lateral_rms_cm": 3.3}
    return cfg


def _circle18(seed, precision):
    cfg = _base("circle18", seed, precision, 7.0)
    cfg.mission = {"kind": "circle", "radius": 0.09, "lap_period": 1.4,
                   "z": 0.05}
    cfg.acceptance = {"lateral_rms_cm": 9.1}
    return cfg


def _mission30s(seed, precision):
    cfg = _base("mission30s", seed, precision, 30.0)
    cfg.mission = {"kind": "script", "script": "mission30",
                   "mode": "terrain-relative"}
    cfg.terrain = {"kind": "course"}
    cfg.acceptance = {"touchdown_cm": 2.0, "course_min_m": 1.0,
                      "obstacle_height_err_cm": 2.0,
                      "touchdown_target": [0.80, 0.0],
                      "obstacle_region": [0.20, 0.50]}
    return cfg


def _mission15s(seed, precision):
    cfg = _base("mission15s", seed, precision, 15.0)
    cfg.mission = {"kind": "script", "script": "mission15",
                   "mode": "terrain-relative"}
    return cfg


PRESETS = {
    "hover5": _hover5,
    "hover10": _hover10,
    "setpoint40": _setpoint40,
    "figure8": _figure8,
    "circle18": _circle18,
    "mission30s": _mission30s,
    "mission15s": _mission15s,
}


def preset(name: str, seed: int = 1, precision: str = "double") -> SimConfig:
    if name not in PRESETS:
        raise ConfigError([f"unknown preset {name!r}; "
                           f"have {', '.join(sorted(PRESETS))}"])
    return PRESETS[name](seed, precision)


def resolve_config(spec: str, seed=None, precision=None) -> SimConfig:
    """A preset name or a YAML config path, with CLI overrides."""
    if spec in PRESETS:
        cfg = preset(spec,
                     seed=1 if seed is None else int(seed),
                     precision=precision or "double")
        return cfg
    if not os.path.exists(spec):
        raise ConfigError(f"{spec!r} is neither a preset "
                          f"({', '.join(sorted(PRESETS))}) nor a config file")
    cfg = load_config(spec)
    if seed is not None:
        cfg.seed = int(seed)
        cfg.noise.rng_seed = int(seed)
    if precision is not None:
        cfg.precision = precision
    return cfg
