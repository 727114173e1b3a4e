"""TOML configuration: embedded defaults, file overrides, field validation."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .control import Se3Gains, VelocityFilterConfig
from .dynamics import VehicleParams
from .rl_env import DEPTH_BINS, RewardConfig
from .server.core import CoreConfig
from .world import CameraModel

DEFAULT_CONFIG_TOML = """\
# vinesim configuration (defaults shown; every key is optional)

[vehicle]
mass = 0.8                      # kg
inertia_diag = [5e-3, 5e-3, 8e-3]  # kg m^2
arm_length = 0.17               # m
thrust_coeff = 2.3e-6           # N s^2 / rad^2
moment_coeff = 4.0e-8           # N m s^2 / rad^2
rotor_speed_max = 1500.0        # rad/s
motor_time_constant = 0.05      # s
collision_radius = 0.3          # m
gravity = 9.81                  # m/s^2
drag_coeff = 0.1                # N s / m

[gains]
k_pos = [6.0, 6.0, 10.0]        # 1/s^2
k_vel = [4.0, 4.0, 6.0]         # 1/s
k_rot = [400.0, 400.0, 120.0]   # 1/s^2 (inertia-normalised)
k_omega = [40.0, 40.0, 18.0]    # 1/s (inertia-normalised)

[velocity_filter]
slew_v_fwd = 4.0                # m/s^2
slew_yaw_rate = 6.0             # rad/s^2
time_constant = 0.15            # s

[camera.rl]
width = 320
height = 240
horizontal_fov_deg = 90.0
max_depth = 30.0

[camera.capture]
width = 640
height = 480
horizontal_fov_deg = 90.0
max_depth = 30.0

[rates]
physics_hz = 500.0
sensor_hz = 30.0
broadcast_hz = 30.0
agent_hz = 10.0

[server]
host = "127.0.0.1"
port = 8765

[sim]
scenario = "vineyard_default"
seed = 0
hold_altitude = 1.8             # m
goto_speed = 1.0                # m/s
grid_cell_size = 0.5            # m

[reward]
lam = 1.0
p_step = 0.01
r_goal = 100.0
r_collision = -30.0
goal_radius = 1.5               # m
max_steps = 500
"""


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass
class Rates:
    physics_hz: float = 500.0
    sensor_hz: float = 30.0
    broadcast_hz: float = 30.0
    agent_hz: float = 10.0


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8765


@dataclass
class SimOptions:
    scenario: str = "vineyard_default"
    seed: int = 0
    hold_altitude: float = 1.8
    goto_speed: float = 1.0
    grid_cell_size: float = 0.5


@dataclass
class Config:
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    gains: Se3Gains = field(default_factory=Se3Gains)
    velocity_filter: VelocityFilterConfig = field(default_factory=VelocityFilterConfig)
    rl_camera: CameraModel = field(default_factory=CameraModel)
    capture_camera: CameraModel = field(
        default_factory=lambda: CameraModel(width=640, height=480)
    )
    rates: Rates = field(default_factory=Rates)
    server: ServerConfig = field(default_factory=ServerConfig)
    sim: SimOptions = field(default_factory=SimOptions)
    reward: RewardConfig = field(default_factory=RewardConfig)

    def core_config(self) -> CoreConfig:
        return CoreConfig(
            vehicle=self.vehicle,
            gains=self.gains,
            velocity_filter=self.velocity_filter,
            rl_camera=self.rl_camera,
            capture_camera=self.capture_camera,
            physics_hz=self.rates.physics_hz,
            goto_speed=self.sim.goto_speed,
            hold_altitude=self.sim.hold_altitude,
        )


def _build(section: str, cls, doc: dict, tuple_fields=()):
    known = cls.__dataclass_fields__
    kwargs = {}
    for key, value in doc.items():
        if key not in known:
            raise ConfigError(f"unknown field {section}.{key}")
        if key in tuple_fields:
            if not isinstance(value, list):
                raise ConfigError(f"{section}.{key} must be a list")
            value = tuple(float(v) for v in value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{section}: {exc}") from exc


def _build_camera(section: str, doc: dict) -> CameraModel:
    doc = dict(doc)
    fov_deg = doc.pop("horizontal_fov_deg", None)
    if fov_deg is not None:
        doc["horizontal_fov"] = math.radians(float(fov_deg))
    return _build(section, CameraModel, doc)


def parse_config(doc: dict) -> Config:
    cfg = Config(
        vehicle=_build("vehicle", VehicleParams, doc.get("vehicle", {}),
                       tuple_fields=("inertia_diag",)),
        gains=_build("gains", Se3Gains, doc.get("gains", {}),
                     tuple_fields=("k_pos", "k_vel", "k_rot", "k_omega")),
        velocity_filter=_build(
            "velocity_filter", VelocityFilterConfig, doc.get("velocity_filter", {})
        ),
        rl_camera=_build_camera("camera.rl", doc.get("camera", {}).get("rl", {})),
        capture_camera=_build_camera(
            "camera.capture",
            {"width": 640, "height": 480, **doc.get("camera", {}).get("capture", {})},
        ),
        rates=_build("rates", Rates, doc.get("rates", {})),
        server=_build("server", ServerConfig, doc.get("server", {})),
        sim=_build("sim", SimOptions, doc.get("sim", {})),
        reward=_build("reward", RewardConfig, doc.get("reward", {})),
    )
    for name in ("physics_hz", "sensor_hz", "broadcast_hz", "agent_hz"):
        if getattr(cfg.rates, name) <= 0.0:
            raise ConfigError(f"rates.{name} must be > 0")
    if cfg.rates.physics_hz < cfg.rates.sensor_hz:
        raise ConfigError("rates.physics_hz must be >= rates.sensor_hz")
    if cfg.rl_camera.width % DEPTH_BINS != 0:
        raise ConfigError(
            f"camera.rl.width must be divisible by {DEPTH_BINS} "
            "(observation depth strip)"
        )
    if not 0 <= cfg.server.port <= 65535:
        raise ConfigError("server.port must be in [0, 65535]")
    return cfg


def load_config(path=None) -> Config:
    """Defaults, overridden by the TOML file at path (if given)."""
    if path is None:
        return parse_config({})
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    return parse_config(doc)
