"""Shipped case study and deterministic reference weather.

The case study reconstructs a one-storey house in the spirit of the
published description: roughly 98 m2 / 250 m3 of heated space over an
unheated crawlspace and below an unheated attic, brick walls with interior
insulation, 15.9 m2 of glazing and one air change per hour of wind- and
delta-T-dependent ventilation.  Its exact target resistance is whatever
``compute_target_req`` reports for it; no published figure is reproduced.

``reference_weather`` synthesises a plausible Geneva-like winter base file
(deterministic for a given seed) so that demos, tests and the pipeline can
run without external data.
"""

from __future__ import annotations

import math
from datetime import datetime

import numpy as np

from .building import (
    BuildingSpec,
    Heater,
    Layer,
    SetpointSchedule,
    Ventilation,
    WallAssembly,
    Window,
    Zone,
)
from .weather import GENEVA, Site, WeatherSeries

PLASTER = dict(conductivity=0.4, density=1000.0, specific_heat=1000.0)
INSULATION = dict(conductivity=0.035, density=40.0, specific_heat=840.0)
BRICK = dict(conductivity=0.89, density=1920.0, specific_heat=790.0)
CONCRETE = dict(conductivity=1.7, density=2200.0, specific_heat=880.0)
WOOD = dict(conductivity=0.14, density=500.0, specific_heat=1600.0)
SOIL = dict(conductivity=2.0, density=1500.0, specific_heat=1800.0)


def case_study() -> BuildingSpec:
    """One-storey house with passive attic and crawlspace (heated zone 'house')."""
    return BuildingSpec(
        zones=[
            Zone(id="house", air_capacitance=9.0e5, volume=250.0),
            Zone(id="attic", air_capacitance=1.5e5, volume=120.0),
            Zone(id="crawlspace", air_capacitance=6.0e4, volume=50.0),
        ],
        wall_assemblies=[
            WallAssembly(
                name="ext_walls",
                from_node="house",
                to_node="outdoor",
                area=84.0,
                layers=(
                    Layer(thickness=0.01, **PLASTER),
                    Layer(thickness=0.10, **INSULATION),
                    Layer(thickness=0.20, **BRICK),
                ),
            ),
            WallAssembly(
                name="ceiling",
                from_node="house",
                to_node="attic",
                area=98.0,
                layers=(
                    Layer(thickness=0.01, **PLASTER),
                    Layer(thickness=0.30, **INSULATION),
                ),
            ),
            WallAssembly(
                name="roof",
                from_node="attic",
                to_node="outdoor",
                area=115.0,
                layers=(Layer(thickness=0.025, **WOOD),),
            ),
            WallAssembly(
                name="floor",
                from_node="house",
                to_node="crawlspace",
                area=98.0,
                layers=(
                    Layer(thickness=0.15, **CONCRETE),
                    Layer(thickness=0.30, **INSULATION),
                ),
            ),
            WallAssembly(
                name="crawl_walls",
                from_node="crawlspace",
                to_node="outdoor",
                area=24.0,
                layers=(Layer(thickness=0.20, **CONCRETE),),
            ),
            WallAssembly(
                name="crawl_ground",
                from_node="crawlspace",
                to_node="ground",
                area=98.0,
                layers=(Layer(thickness=0.50, **SOIL),),
            ),
        ],
        windows=[
            Window(zone="house", orientation="N", area=0.6, u_value=1.45, solar_aperture=0.15),
            Window(zone="house", orientation="E", area=5.4, u_value=1.45, solar_aperture=0.25),
            Window(zone="house", orientation="S", area=6.7, u_value=1.45, solar_aperture=0.35),
            Window(zone="house", orientation="W", area=3.2, u_value=1.45, solar_aperture=0.25),
        ],
        # 1.0 air change per hour of the 250 m3 heated volume.
        ventilation=Ventilation(zone="house", design_flow=250.0 / 3600.0),
        heater=Heater(zone="house", max_power=8000.0, proportional_gain=800.0),
        setpoint_schedule=SetpointSchedule(),
        ground_temperature=10.0,
    )


def _ar1(rng: np.random.Generator, n: int, phi: float, sigma_marginal: float) -> np.ndarray:
    eps = rng.standard_normal(n)
    z = np.empty(n)
    z[0] = eps[0]
    scale = math.sqrt(1.0 - phi * phi)
    for k in range(1, n):
        z[k] = phi * z[k - 1] + scale * eps[k]
    return sigma_marginal * z


def reference_weather(
    start: datetime = datetime(2008, 10, 25),
    days: int = 135,
    seed: int = 20081025,
    site: Site = GENEVA,
) -> WeatherSeries:
    """Hourly Geneva-like winter base series covering the default run window."""
    n = days * 24
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    hours = np.arange(n)
    doy0 = start.timetuple().tm_yday
    doy = (doy0 + hours / 24.0) % 365.0
    hod = (start.hour + hours) % 24.0

    seasonal = 10.0 - 9.0 * np.cos(2.0 * math.pi * (doy - 20.0) / 365.0)
    diurnal = 2.5 * np.sin(2.0 * math.pi * (hod - 9.0) / 24.0)
    # Multi-day synoptic persistence: cold spells and warm spells last days,
    # so multi-week means wander by a couple of kelvin between samples.
    t_out = seasonal + diurnal + _ar1(rng, n, phi=0.99, sigma_marginal=3.5)

    rh = np.clip(76.0 + _ar1(rng, n, phi=0.95, sigma_marginal=10.0), 25.0, 100.0)

    wind = 2.6 + 0.4 * np.sin(2.0 * math.pi * (hod - 12.0) / 24.0)
    wind = np.clip(wind + _ar1(rng, n, phi=0.97, sigma_marginal=1.5), 0.0, None)

    wind_dir = np.mod(210.0 + _ar1(rng, n, phi=0.95, sigma_marginal=60.0), 360.0)

    # Daily clear-sky factor with day-to-day persistence, mapped into (0, 1).
    f_day_raw = _ar1(rng, days, phi=0.7, sigma_marginal=1.0)
    f_day = 1.0 / (1.0 + np.exp(-1.2 * f_day_raw))
    f_hour = np.repeat(f_day, 24)[:n]
    daylight = np.clip(np.sin(math.pi * (hod - 8.0) / 9.0), 0.0, None)
    i_dn = 650.0 * f_hour * daylight**1.3
    i_dh = 110.0 * (1.0 - 0.55 * f_hour) * daylight**0.9

    return WeatherSeries(
        start=start,
        step_s=3600,
        site=site,
        t_out=t_out,
        rh=rh,
        i_dn=i_dn,
        i_dh=i_dh,
        wind_speed=wind,
        wind_dir=wind_dir,
    )
