"""Reference simulation: implicit-Euler integration of the thermal network.

The integrator treats conduction, window losses and the proportional heater
implicitly; the ventilation conductance is evaluated with the zone
temperature lagged one step (the flux itself stays implicit), which keeps
every step a linear solve.  The heater is first solved unclamped and
re-solved with fixed power when the proportional command leaves
``[0, max_power]``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np
from numba import njit

from .building import (
    AIR_DENSITY,
    AIR_SPECIFIC_HEAT,
    SetpointSchedule,
    setpoint,
)
from .errors import (
    CoverageError,
    InsufficientDataError,
    NumericalError,
    StateError,
    ValidationError,
)
from .network import NetworkModel
from .weather import WeatherSeries, global_horizontal

WARMUP_DAYS = 15
PAPER_STEP_S = 600

# Measurement noise levels injected on simulator outputs.
NOISE_STD_TEMPERATURE = 0.2   # degC
NOISE_STD_POWER = 20.0        # W
NOISE_STD_SOLAR = 5.0         # W/m2


@dataclass
class RunWindow:
    start: datetime
    end: datetime
    step_s: int = PAPER_STEP_S

    def __post_init__(self):
        if self.end <= self.start:
            raise ValidationError("run window end must be after start")
        if self.step_s <= 0:
            raise ValidationError("step_s must be positive")


@dataclass
class SimDataset:
    """Time-stamped (T_in, T_out, I_sol, P_h) tuples for calibration."""

    start: datetime
    step_s: int
    t_in: np.ndarray
    t_out: np.ndarray
    i_sol: np.ndarray
    p_h: np.ndarray
    noisy: bool = False
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.t_in)
        for name in ("t_in", "t_out", "i_sol", "p_h"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValidationError(f"dataset column {name} has inconsistent length")
            setattr(self, name, arr)

    def __len__(self):
        return self.t_in.shape[0]

    def timestamps(self) -> list[datetime]:
        return [self.start + timedelta(seconds=self.step_s * k) for k in range(len(self))]

    def inputs(self) -> np.ndarray:
        """Model input matrix [T_out, I_sol, P_h], one row per step."""
        return np.column_stack([self.t_out, self.i_sol, self.p_h])


def write_dataset(ds: SimDataset, path) -> None:
    """CSV ``time,t_in,t_out,i_sol,p_h`` plus a JSON sidecar with metadata."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["time", "t_in", "t_out", "i_sol", "p_h"])
        for k, ts in enumerate(ds.timestamps()):
            writer.writerow(
                [
                    ts.isoformat(),
                    repr(float(ds.t_in[k])),
                    repr(float(ds.t_out[k])),
                    repr(float(ds.i_sol[k])),
                    repr(float(ds.p_h[k])),
                ]
            )
    sidecar = {
        "noisy": ds.noisy,
        "seed": ds.seed,
        "start": ds.start.isoformat(),
        "step_s": ds.step_s,
        "spec_hash": ds.meta.get("spec_hash"),
        "window": ds.meta.get("window"),
        "meta": ds.meta,
    }
    path.with_suffix(".json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def read_dataset(path) -> SimDataset:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        rows = list(reader)
    sidecar = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
    return SimDataset(
        start=datetime.fromisoformat(sidecar["start"]),
        step_s=sidecar["step_s"],
        t_in=np.array([float(r["t_in"]) for r in rows]),
        t_out=np.array([float(r["t_out"]) for r in rows]),
        i_sol=np.array([float(r["i_sol"]) for r in rows]),
        p_h=np.array([float(r["p_h"]) for r in rows]),
        noisy=sidecar["noisy"],
        seed=sidecar["seed"],
        meta=sidecar.get("meta", {}),
    )


def ventilation_flow(
    t_zone,
    t_odb,
    wind,
    design_flow: float,
    schedule: float,
    coeffs=(0.606, 0.03636, 0.1177, 0.0),
):
    """Air change flow rate (m3/s), wind- and delta-T-dependent."""
    a, b, c, d = coeffs
    return design_flow * schedule * (
        a + b * np.abs(np.asarray(t_zone) - t_odb) + c * wind + d * wind**2
    )


@njit(cache=True)
def _integrate(
    m0,            # (n, n) C/dt + K
    c_over_dt,     # (n,)
    f_out,         # (n,) conductances to outdoor
    f_gnd,         # (n,) conductances to ground
    solar,         # (n,) W per (W/m2)
    t_out,         # (N,)
    igh,           # (N,)
    t_set,         # (N,)
    vent_m1,       # (N,) rho*cp*design_flow*schedule per step
    vent_m2,       # (N,) A + C*w + D*w^2 per step
    vent_b,        # scalar B coefficient
    t_ground,      # scalar
    zone,          # heated/ventilated zone index
    gain,          # W/K
    p_max,         # W
    x_init,        # (n,)
    n_keep,        # output steps kept at the end
):
    n_steps = t_out.shape[0]
    n = m0.shape[0]
    x = x_init.copy()
    out_t = np.empty(n_keep)
    out_p = np.empty(n_keep)
    first_out = n_steps - n_keep
    for k in range(n_steps):
        g_v = vent_m1[k] * (vent_m2[k] + vent_b * abs(x[zone] - t_out[k]))
        b = c_over_dt * x + f_out * t_out[k] + f_gnd * t_ground + solar * igh[k]
        a_sys = m0.copy()
        a_sys[zone, zone] += g_v + gain
        b[zone] += g_v * t_out[k] + gain * t_set[k]
        x_new = np.linalg.solve(a_sys, b)
        p = gain * (t_set[k] - x_new[zone])
        if p < 0.0 or p > p_max:
            p = 0.0 if p < 0.0 else p_max
            a_sys = m0.copy()
            a_sys[zone, zone] += g_v
            b[zone] += p - gain * t_set[k]
            x_new = np.linalg.solve(a_sys, b)
        if not np.isfinite(x_new[zone]):
            return out_t, out_p, k
        x = x_new
        if k >= first_out:
            out_t[k - first_out] = x[zone]
            out_p[k - first_out] = p
    return out_t, out_p, -1


def _interp_weather(weather: WeatherSeries, epochs: np.ndarray) -> dict[str, np.ndarray]:
    w_epochs = weather.start.timestamp() + np.arange(len(weather)) * float(weather.step_s)
    if epochs[0] < w_epochs[0] - 1e-6 or epochs[-1] > w_epochs[-1] + 1e-6:
        raise CoverageError(
            "weather does not cover the simulation window including warm-up"
        )
    out = {}
    for vid in ("t_out", "rh", "i_dn", "i_dh", "wind_speed", "wind_dir"):
        out[vid] = np.interp(epochs, w_epochs, weather.variable(vid))
    return out


def simulate(
    network: NetworkModel,
    weather: WeatherSeries,
    run: RunWindow,
    schedule: SetpointSchedule | None = None,
) -> SimDataset:
    """Simulate the reference network and return the clean output window.

    Integration starts ``WARMUP_DAYS`` before ``run.start`` so that
    initial-condition transients never reach the output; the returned
    dataset covers ``[run.start, run.end)`` at ``run.step_s``.

    Raises:
        CoverageError: weather does not span [start - warmup, end].
        NumericalError: the state became non-finite (message names the step).
    """
    spec = network.building
    if schedule is None:
        schedule = spec.setpoint_schedule
    sim_start = run.start - timedelta(days=WARMUP_DAYS)
    n_steps = int(round((run.end - sim_start).total_seconds() / run.step_s))
    n_keep = int(round((run.end - run.start).total_seconds() / run.step_s))
    epochs = sim_start.timestamp() + np.arange(n_steps) * float(run.step_s)
    wx = _interp_weather(weather, epochs)

    grid_weather = WeatherSeries(
        start=sim_start,
        step_s=run.step_s,
        site=weather.site,
        t_out=wx["t_out"],
        rh=wx["rh"],
        i_dn=wx["i_dn"],
        i_dh=wx["i_dh"],
        wind_speed=wx["wind_speed"],
        wind_dir=np.mod(wx["wind_dir"], 360.0),
    )
    igh = global_horizontal(grid_weather)

    stamps = [sim_start + timedelta(seconds=run.step_s * k) for k in range(n_steps)]
    t_set = np.array([setpoint(t, schedule) for t in stamps])

    vent = spec.ventilation
    a, bcoef, c, d = vent.coeffs
    rho_cp = AIR_DENSITY * AIR_SPECIFIC_HEAT
    vent_m1 = np.full(n_steps, rho_cp * vent.design_flow * vent.schedule)
    vent_m2 = a + c * wx["wind_speed"] + d * wx["wind_speed"] ** 2

    dt = float(run.step_s)
    c_over_dt = network.capacitance / dt
    m0 = np.diag(c_over_dt) + network.conductance

    x_init = np.full(network.n_nodes, 17.0)
    out_t, out_p, bad_step = _integrate(
        m0,
        c_over_dt,
        network.boundary[:, 0].copy(),
        network.boundary[:, 1].copy(),
        network.solar_gain.copy(),
        wx["t_out"],
        igh,
        t_set,
        vent_m1,
        vent_m2,
        bcoef,
        spec.ground_temperature,
        network.zone_index[spec.heater.zone],
        spec.heater.proportional_gain,
        spec.heater.max_power,
        x_init,
        n_keep,
    )
    if bad_step >= 0:
        raise NumericalError(
            f"simulation state became non-finite at step {bad_step} "
            f"({stamps[bad_step].isoformat()})"
        )
    first_out = n_steps - n_keep
    return SimDataset(
        start=run.start,
        step_s=run.step_s,
        t_in=out_t,
        t_out=wx["t_out"][first_out:].copy(),
        i_sol=igh[first_out:].copy(),
        p_h=out_p,
        meta={"window": [run.start.isoformat(), run.end.isoformat()]},
    )


def add_measurement_noise(ds: SimDataset, seed: int) -> SimDataset:
    """Add white measurement noise to all four channels (deterministic per seed)."""
    if ds.noisy:
        raise StateError("dataset already carries measurement noise")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    n = len(ds)
    return SimDataset(
        start=ds.start,
        step_s=ds.step_s,
        t_in=ds.t_in + rng.normal(0.0, NOISE_STD_TEMPERATURE, n),
        t_out=ds.t_out + rng.normal(0.0, NOISE_STD_TEMPERATURE, n),
        i_sol=ds.i_sol + rng.normal(0.0, NOISE_STD_SOLAR, n),
        p_h=ds.p_h + rng.normal(0.0, NOISE_STD_POWER, n),
        noisy=True,
        seed=seed,
        meta=dict(ds.meta),
    )


@dataclass
class TargetConditions:
    """Constant boundary conditions for the target R*_eq run."""

    t_out: float = 2.0
    wind: float | np.ndarray = 0.0
    t_set: float = 20.0
    rh: float = 70.0
    wind_dir: float = 180.0


@dataclass
class TargetReport:
    r_eq_star: float
    htc: float
    r_squared: float
    points: list[tuple[float, float]]  # (daily mean delta-T K, daily mean P W)

    def to_dict(self) -> dict:
        return {
            "r_eq_star": self.r_eq_star,
            "htc": self.htc,
            "r_squared": self.r_squared,
            "points": [[dt, p] for dt, p in self.points],
        }


def compute_target_req(
    network: NetworkModel,
    steady: TargetConditions,
    days: int = 30,
    step_s: int = PAPER_STEP_S,
) -> TargetReport:
    """Ground-truth R*_eq from a constant-boundary run.

    Simulates with a constant setpoint, constant outdoor temperature and no
    sun, then regresses daily-average heating power on daily-average
    indoor-outdoor difference through the origin.  R^2 is the uncentered
    coefficient of the through-origin fit, so residual transients or
    non-constant wind show up as R^2 < 1.

    Raises:
        InsufficientDataError: fewer than 10 daily points requested.
    """
    if days < 10:
        raise InsufficientDataError(
            f"target regression needs at least 10 daily points, got {days}"
        )
    start = datetime(2009, 1, 1)
    run = RunWindow(start=start, end=start + timedelta(days=days), step_s=step_s)
    n_weather = int((days + WARMUP_DAYS) * 86400 / 3600) + 2
    wind = np.asarray(steady.wind, dtype=float)
    if wind.ndim == 0:
        wind_arr = np.full(n_weather, float(wind))
    else:
        wind_arr = np.resize(wind, n_weather)
    weather = WeatherSeries(
        start=start - timedelta(days=WARMUP_DAYS),
        step_s=3600,
        t_out=np.full(n_weather, steady.t_out),
        rh=np.full(n_weather, steady.rh),
        i_dn=np.zeros(n_weather),
        i_dh=np.zeros(n_weather),
        wind_speed=wind_arr,
        wind_dir=np.full(n_weather, steady.wind_dir),
    )
    schedule = SetpointSchedule(
        comfort=steady.t_set, setback=steady.t_set,
        workday_morning=(0, 24), workday_evening=(0, 24), allday_window=(0, 24),
    )
    ds = simulate(network, weather, run, schedule=schedule)

    per_day = int(86400 / step_s)
    n_days = len(ds) // per_day
    delta = (ds.t_in - ds.t_out)[: n_days * per_day].reshape(n_days, per_day).mean(axis=1)
    power = ds.p_h[: n_days * per_day].reshape(n_days, per_day).mean(axis=1)

    htc = float(power @ delta / (delta @ delta))
    resid = power - htc * delta
    ss_tot = float(power @ power)
    r_squared = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 0.0
    return TargetReport(
        r_eq_star=1.0 / htc,
        htc=htc,
        r_squared=r_squared,
        points=list(zip(delta.tolist(), power.tolist())),
    )


def extract_subset(ds: SimDataset, start: datetime, duration_days: float) -> SimDataset:
    """Contiguous slice of ``duration_days`` starting at ``start``.

    Raises:
        CoverageError: the requested window leaves the dataset range.
    """
    ds_end = ds.start + timedelta(seconds=ds.step_s * len(ds))
    end = start + timedelta(days=duration_days)
    if start < ds.start or end > ds_end:
        raise CoverageError(
            f"subset [{start.isoformat()}, {end.isoformat()}) outside dataset "
            f"range [{ds.start.isoformat()}, {ds_end.isoformat()})"
        )
    i0 = int(round((start - ds.start).total_seconds() / ds.step_s))
    n = int(round(duration_days * 86400 / ds.step_s))
    meta = dict(ds.meta)
    meta["subset"] = {
        "start": start.isoformat(),
        "duration_days": duration_days,
        "parent_seed": ds.seed,
    }
    return SimDataset(
        start=start,
        step_s=ds.step_s,
        t_in=ds.t_in[i0 : i0 + n].copy(),
        t_out=ds.t_out[i0 : i0 + n].copy(),
        i_sol=ds.i_sol[i0 : i0 + n].copy(),
        p_h=ds.p_h[i0 : i0 + n].copy(),
        noisy=ds.noisy,
        seed=ds.seed,
        meta=meta,
    )
