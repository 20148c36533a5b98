"""Parametric 4-wheeled vehicle presets and their scaling laws."""

from dataclasses import dataclass
from importlib import resources
from typing import Tuple

import yaml

from .errors import ConfigError
from .terrain import WorldScale


@dataclass(frozen=True)
class VehicleParams:
    name: str
    mass: float
    inertia_diag: Tuple[float, float, float]
    wheelbase: float
    track_width: float
    com_height: float            # CoM height above the axle plane
    wheel_radius: float
    wheel_width: float
    suspension_stiffness: float  # per wheel, N/m
    suspension_damping: float    # per wheel, N*s/m
    suspension_travel: float
    max_steer_angle: float
    max_drive_force: float       # total over 4 wheels
    max_speed: float
    rolling_resistance: float
    drag_coefficient: float      # N/(m/s)^2
    chassis_radius: float        # obstacle collision sphere
    obstacle_stiffness: float
    scale: WorldScale

    def __post_init__(self):
        positives = ("mass", "wheelbase", "track_width", "com_height", "wheel_radius",
                     "wheel_width", "suspension_stiffness", "suspension_damping",
                     "suspension_travel", "max_steer_angle", "max_drive_force",
                     "max_speed", "chassis_radius", "obstacle_stiffness")
        for field_name in positives:
            if getattr(self, field_name) <= 0:
                raise ConfigError(f"{field_name} must be positive")
        if any(v <= 0 for v in self.inertia_diag):
            raise ConfigError("inertia_diag must be positive")
        if self.com_height >= 2 * self.wheel_radius + self.suspension_travel:
            raise ConfigError("com_height too large for constructible geometry")


def _load_presets() -> dict:
    text = resources.files("terrabench.data").joinpath("vehicles.yaml").read_text()
    return yaml.safe_load(text)["presets"]


_PRESETS = None


def available_presets() -> Tuple[str, ...]:
    global _PRESETS
    if _PRESETS is None:
        _PRESETS = _load_presets()
    return tuple(sorted(_PRESETS))


def vehicle_preset(name: str, scale: WorldScale = WorldScale.FULL) -> VehicleParams:
    """Load a named preset scaled to the requested world scale."""
    global _PRESETS
    if _PRESETS is None:
        _PRESETS = _load_presets()
    if name not in _PRESETS:
        raise ConfigError(f"unknown vehicle preset {name!r}; available: "
                          f"{', '.join(sorted(_PRESETS))}")
    if not isinstance(scale, WorldScale):
        scale = WorldScale(scale)
    raw = _PRESETS[name]
    s = scale.factor
    return VehicleParams(
        name=name,
        mass=raw["mass"] * s ** 3,
        inertia_diag=tuple(v * s ** 5 for v in raw["inertia_diag"]),
        wheelbase=raw["wheelbase"] * s,
        track_width=raw["track_width"] * s,
        com_height=raw["com_height"] * s,
        wheel_radius=raw["wheel_radius"] * s,
        wheel_width=raw["wheel_width"] * s,
        suspension_stiffness=raw["suspension_stiffness"] * s ** 2,
        suspension_damping=raw["suspension_damping"] * s ** 2,
        suspension_travel=raw["suspension_travel"] * s,
        max_steer_angle=raw["max_steer_angle"],
        max_drive_force=raw["max_drive_force"] * s ** 3,
        max_speed=raw["max_speed"] * s,
        rolling_resistance=raw["rolling_resistance"],
        drag_coefficient=raw["drag_coefficient"] * s,
        chassis_radius=raw["chassis_radius"] * s,
        obstacle_stiffness=raw["obstacle_stiffness"] * s ** 2,
        scale=scale,
    )
