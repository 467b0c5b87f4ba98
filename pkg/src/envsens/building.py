"""Building description consumed by the thermal-network reference simulator.

A building is a set of air zones connected by layered wall assemblies,
plus windows (treated as pure conductances), one ventilated zone, one
proportionally controlled heater and an occupant-style setpoint schedule.
``"outdoor"`` and ``"ground"`` are reserved boundary node names.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from datetime import datetime
from pathlib import Path

from .errors import ValidationError

OUTDOOR = "outdoor"
GROUND = "ground"
BOUNDARY_NODES = (OUTDOOR, GROUND)

# Default infiltration/ventilation coefficients (BLAST legacy values).
VENT_COEFFS_DEFAULT = (0.606, 0.03636, 0.1177, 0.0)

AIR_DENSITY = 1.204       # kg/m3
AIR_SPECIFIC_HEAT = 1006.0  # J/kgK


@dataclass(frozen=True)
class Layer:
    thickness: float       # m
    conductivity: float    # W/mK
    density: float         # kg/m3
    specific_heat: float   # J/kgK

    def __post_init__(self):
        for name in ("thickness", "conductivity", "density", "specific_heat"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"layer {name} must be > 0")


@dataclass(frozen=True)
class WallAssembly:
    name: str
    from_node: str
    to_node: str
    area: float
    layers: tuple[Layer, ...]
    sub_nodes: int = 3     # finite-difference nodes per layer

    def __post_init__(self):
        if self.area <= 0:
            raise ValidationError(f"wall {self.name}: area must be > 0")
        if self.sub_nodes < 1:
            raise ValidationError(f"wall {self.name}: sub_nodes must be >= 1")
        if not self.layers:
            raise ValidationError(f"wall {self.name}: needs at least one layer")


@dataclass(frozen=True)
class Window:
    zone: str
    orientation: str
    area: float
    u_value: float
    solar_aperture: float  # fraction of incident global horizontal reaching the zone

    def __post_init__(self):
        if self.area <= 0 or self.u_value <= 0:
            raise ValidationError("window area and u_value must be > 0")
        if not 0.0 <= self.solar_aperture <= 1.0:
            raise ValidationError("solar_aperture must be in [0, 1]")


@dataclass(frozen=True)
class Ventilation:
    zone: str
    design_flow: float                 # m3/s
    coeffs: tuple[float, float, float, float] = VENT_COEFFS_DEFAULT
    schedule: float = 1.0              # constant fraction in [0, 1]

    def __post_init__(self):
        if self.design_flow < 0:
            raise ValidationError("design_flow must be >= 0")
        if not 0.0 <= self.schedule <= 1.0:
            raise ValidationError("ventilation schedule must be in [0, 1]")


@dataclass(frozen=True)
class Heater:
    zone: str
    max_power: float            # W
    proportional_gain: float = 800.0  # W/K

    def __post_init__(self):
        if self.max_power < 0:
            raise ValidationError("heater max_power must be >= 0")
        if self.proportional_gain <= 0:
            raise ValidationError("heater gain must be > 0")


@dataclass(frozen=True)
class Zone:
    id: str
    air_capacitance: float  # J/K
    volume: float           # m3

    def __post_init__(self):
        if self.air_capacitance <= 0 or self.volume <= 0:
            raise ValidationError(f"zone {self.id}: capacitance and volume must be > 0")
        if self.id in BOUNDARY_NODES:
            raise ValidationError(f"zone id {self.id!r} is reserved")


@dataclass(frozen=True)
class SetpointSchedule:
    """Occupant-friendly weekly heating schedule.

    Comfort temperature on workday mornings and evenings; all day on
    Wednesdays and weekends; setback otherwise.
    """

    comfort: float = 20.0
    setback: float = 17.0
    workday_morning: tuple[int, int] = (6, 9)
    workday_evening: tuple[int, int] = (18, 23)
    allday_window: tuple[int, int] = (7, 23)
    allday_weekdays: tuple[int, ...] = (2, 5, 6)  # Wednesday, Saturday, Sunday


def setpoint(t: datetime, schedule: SetpointSchedule) -> float:
    """Heating setpoint (degC) at time ``t`` under the weekly pattern."""
    hour = t.hour + t.minute / 60.0 + t.second / 3600.0
    if t.weekday() in schedule.allday_weekdays:
        lo, hi = schedule.allday_window
        return schedule.comfort if lo <= hour < hi else schedule.setback
    for lo, hi in (schedule.workday_morning, schedule.workday_evening):
        if lo <= hour < hi:
            return schedule.comfort
    return schedule.setback


CONSTANT_SCHEDULE = SetpointSchedule(
    comfort=20.0, setback=20.0, workday_morning=(0, 24),
    workday_evening=(0, 24), allday_window=(0, 24),
)


@dataclass
class BuildingSpec:
    zones: list[Zone]
    wall_assemblies: list[WallAssembly]
    windows: list[Window]
    ventilation: Ventilation
    heater: Heater
    setpoint_schedule: SetpointSchedule = field(default_factory=SetpointSchedule)
    ground_temperature: float = 10.0

    def __post_init__(self):
        zone_ids = [z.id for z in self.zones]
        if len(set(zone_ids)) != len(zone_ids):
            raise ValidationError("duplicate zone ids")
        valid = set(zone_ids) | set(BOUNDARY_NODES)
        for wall in self.wall_assemblies:
            for node in (wall.from_node, wall.to_node):
                if node not in valid:
                    raise ValidationError(
                        f"wall {wall.name}: unknown node {node!r}"
                    )
        for win in self.windows:
            if win.zone not in zone_ids:
                raise ValidationError(f"window references unknown zone {win.zone!r}")
        for owner, obj in (("ventilation", self.ventilation), ("heater", self.heater)):
            if obj.zone not in zone_ids:
                raise ValidationError(f"{owner} references unknown zone {obj.zone!r}")
        if self.ventilation.zone != self.heater.zone:
            raise ValidationError(
                "ventilation and heater must serve the same (conditioned) zone"
            )

    def zone_ids(self) -> list[str]:
        return [z.id for z in self.zones]

    def to_dict(self) -> dict:
        d = asdict(self)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BuildingSpec":
        return cls(
            zones=[Zone(**z) for z in d["zones"]],
            wall_assemblies=[
                WallAssembly(
                    name=w["name"],
                    from_node=w["from_node"],
                    to_node=w["to_node"],
                    area=w["area"],
                    layers=tuple(Layer(**la) for la in w["layers"]),
                    sub_nodes=w.get("sub_nodes", 3),
                )
                for w in d["wall_assemblies"]
            ],
            windows=[Window(**w) for w in d["windows"]],
            ventilation=Ventilation(
                zone=d["ventilation"]["zone"],
                design_flow=d["ventilation"]["design_flow"],
                coeffs=tuple(d["ventilation"].get("coeffs", VENT_COEFFS_DEFAULT)),
                schedule=d["ventilation"].get("schedule", 1.0),
            ),
            heater=Heater(**d["heater"]),
            setpoint_schedule=SetpointSchedule(
                comfort=d["setpoint_schedule"].get("comfort", 20.0),
                setback=d["setpoint_schedule"].get("setback", 17.0),
                workday_morning=tuple(d["setpoint_schedule"].get("workday_morning", (6, 9))),
                workday_evening=tuple(d["setpoint_schedule"].get("workday_evening", (18, 23))),
                allday_window=tuple(d["setpoint_schedule"].get("allday_window", (7, 23))),
                allday_weekdays=tuple(d["setpoint_schedule"].get("allday_weekdays", (2, 5, 6))),
            ) if "setpoint_schedule" in d else SetpointSchedule(),
            ground_temperature=d.get("ground_temperature", 10.0),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def load_building(path) -> BuildingSpec:
    """Read a building spec from its JSON config file."""
    with open(Path(path), encoding="utf-8") as f:
        return BuildingSpec.from_dict(json.load(f))


def save_building(spec: BuildingSpec, path) -> None:
    Path(path).write_text(spec.to_json() + "\n", encoding="utf-8")
