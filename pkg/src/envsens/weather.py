"""Stochastic weather generation for repeatability experiments.

Six weather variables (dry-bulb temperature, relative humidity, direct
normal and diffuse horizontal irradiance, wind speed, wind direction) are
perturbed independently around a typical-year base file.  Each variable is
modelled as a deterministic harmonic trend (mean plus seasonal and diurnal
sinusoids) plus an AR(1) residual whose marginal distribution is restored
by an empirical quantile map.  Because every variable has its own seed
stream, substituting one group's seed between two samples is well defined,
which is what the pick-freeze sample plan for grouped Sobol indices
requires.

Two variables get special treatment: wind direction is circular (the trend
is fitted on wrapped deviations from the circular mean and generated values
wrap mod 360 instead of clamping), and the irradiance channels are
restricted to the sun-above-horizon support so perturbation never invents
nighttime sun.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .errors import FormatError, InsufficientDataError, SchemaError, ValidationError

VARIABLE_IDS = ("t_out", "rh", "i_dn", "i_dh", "wind_speed", "wind_dir")

# Physical clamp ranges; wind direction is wrapped, not clamped.
PHYSICAL_BOUNDS = {
    "t_out": (-60.0, 60.0),
    "rh": (0.0, 100.0),
    "i_dn": (0.0, 1367.0),
    "i_dh": (0.0, 700.0),
    "wind_speed": (0.0, 60.0),
    "wind_dir": (0.0, 360.0),
}

# Annual and semi-annual harmonics describe the smooth seasonal shape; the
# 24 h / 12 h pair carries the diurnal cycle.  Everything faster stays in
# the AR(1) residual so that samples keep realistic multi-day variability.
_TREND_PERIODS_H = (8766.0, 4383.0, 24.0, 12.0)
_QUANTILE_PROBS = np.arange(1, 100) / 100.0


@dataclass(frozen=True)
class Site:
    """Geographic location used for solar geometry."""

    latitude: float
    longitude: float
    utc_offset: float


#: Default site matching the shipped case study (Geneva, Switzerland).
GENEVA = Site(latitude=46.25, longitude=6.13, utc_offset=1.0)


@dataclass
class WeatherSeries:
    """Aligned weather time series on a uniform grid.

    Attributes:
        start: first timestamp (local standard time, no DST).
        step_s: sampling step in seconds.
        t_out: dry-bulb temperature, degC.
        rh: relative humidity, percent.
        i_dn: direct normal irradiance, W/m2.
        i_dh: diffuse horizontal irradiance, W/m2.
        wind_speed: m/s.
        wind_dir: meteorological degrees in [0, 360).
        site: location metadata for solar geometry.
    """

    start: datetime
    step_s: int
    t_out: np.ndarray
    rh: np.ndarray
    i_dn: np.ndarray
    i_dh: np.ndarray
    wind_speed: np.ndarray
    wind_dir: np.ndarray
    site: Site = GENEVA

    def __post_init__(self):
        if self.step_s <= 0:
            raise ValidationError(f"step_s must be positive, got {self.step_s}")
        arrays = [np.asarray(getattr(self, v), dtype=float) for v in VARIABLE_IDS]
        n = arrays[0].shape[0]
        if n < 1:
            raise ValidationError("weather series must contain at least one step")
        for vid, arr in zip(VARIABLE_IDS, arrays):
            if arr.shape != (n,):
                raise ValidationError(
                    f"column {vid} has length {arr.shape}, expected ({n},)"
                )
            setattr(self, vid, arr)
        self._check_ranges()

    def _check_ranges(self):
        checks = [
            ("rh", self.rh < 0.0), ("rh", self.rh > 100.0),
            ("i_dn", self.i_dn < 0.0),
            ("i_dh", self.i_dh < 0.0),
            ("wind_speed", self.wind_speed < 0.0),
            ("wind_dir", self.wind_dir < 0.0), ("wind_dir", self.wind_dir >= 360.0),
        ]
        for col, bad in checks:
            if bad.any():
                row = int(np.argmax(bad))
                raise ValidationError(
                    f"value out of range at row {row}, column {col}: "
                    f"{getattr(self, col)[row]!r}"
                )

    def __len__(self):
        return self.t_out.shape[0]

    def variable(self, variable_id: str) -> np.ndarray:
        if variable_id not in VARIABLE_IDS:
            raise ValidationError(f"unknown weather variable {variable_id!r}")
        return getattr(self, variable_id)

    def timestamps(self) -> list[datetime]:
        return [self.start + timedelta(seconds=self.step_s * k) for k in range(len(self))]

    def hours_from_midnight(self) -> np.ndarray:
        """Hours since local midnight of the start day, per step."""
        h0 = (
            self.start.hour
            + self.start.minute / 60.0
            + self.start.second / 3600.0
        )
        return h0 + np.arange(len(self)) * (self.step_s / 3600.0)


def load_weather(path, format: str = "csv", site: Site = GENEVA) -> WeatherSeries:
    """Load and validate a weather CSV.

    Expected header: ``time,t_out,rh,i_dn,i_dh,wind_speed,wind_dir`` with
    ISO-8601 timestamps on a uniform step.

    Raises:
        SchemaError: a required column is missing.
        FormatError: timestamps are not uniformly spaced or unparsable.
        ValidationError: a value violates its physical range (the message
            names the offending row and column).
    """
    if format != "csv":
        raise FormatError(f"unsupported weather format {format!r}")
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        missing = [c for c in ("time", *VARIABLE_IDS) if c not in header]
        if missing:
            raise SchemaError(f"{path.name}: missing columns {missing}")
        times = []
        columns = {vid: [] for vid in VARIABLE_IDS}
        for row_idx, row in enumerate(reader):
            try:
                times.append(datetime.fromisoformat(row["time"]))
            except ValueError as exc:
                raise FormatError(
                    f"{path.name}: bad timestamp at row {row_idx}: {row['time']!r}"
                ) from exc
            for vid in VARIABLE_IDS:
                try:
                    columns[vid].append(float(row[vid]))
                except (TypeError, ValueError) as exc:
                    raise ValidationError(
                        f"{path.name}: non-numeric value at row {row_idx}, "
                        f"column {vid}: {row[vid]!r}"
                    ) from exc
    if not times:
        raise FormatError(f"{path.name}: no data rows")
    if len(times) > 1:
        steps = {
            (b - a).total_seconds() for a, b in zip(times[:-1], times[1:])
        }
        if len(steps) != 1:
            raise FormatError(
                f"{path.name}: non-uniform time step, found steps {sorted(steps)}"
            )
        step_s = steps.pop()
        if step_s <= 0 or step_s != int(step_s):
            raise FormatError(f"{path.name}: invalid time step {step_s}")
        step_s = int(step_s)
    else:
        step_s = 3600
    return WeatherSeries(
        start=times[0],
        step_s=step_s,
        site=site,
        **{vid: np.array(columns[vid]) for vid in VARIABLE_IDS},
    )


def write_weather(series: WeatherSeries, path) -> None:
    """Write a weather series in the canonical CSV schema (deterministic bytes)."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["time", *VARIABLE_IDS])
        stamps = series.timestamps()
        cols = [series.variable(vid) for vid in VARIABLE_IDS]
        for k, ts in enumerate(stamps):
            writer.writerow([ts.isoformat(), *(repr(float(c[k])) for c in cols)])


# ---------------------------------------------------------------------------
# Per-variable stochastic models
# ---------------------------------------------------------------------------


@dataclass
class VariableModel:
    """Harmonic trend + AR(1) residual + quantile map for one weather variable.

    The trend combines seasonal/diurnal sinusoids with one offset per
    calendar month (months are the atomic unit of a typical-year file, so
    monthly means are preserved by construction).  Irradiance variables are
    modelled in square-root space, which keeps the non-negativity clamp
    nearly inactive, and carry a daylight support mask.
    """

    variable_id: str
    offset: float            # circular mean for wind_dir, 0 otherwise
    trend_coeffs: np.ndarray  # [mean, then sin/cos per period in _TREND_PERIODS_H]
    month_offsets: dict      # calendar month -> residual mean correction
    phi: float
    sigma: float
    gauss_q: np.ndarray
    emp_q: np.ndarray
    bounds: tuple[float, float]
    circular: bool
    sqrt_space: bool
    n_steps: int
    step_s: int
    start_hour: float
    months: np.ndarray       # calendar month per step
    degenerate: bool = False
    support: np.ndarray | None = None  # irradiance: daylight mask

    def __post_init__(self):
        if not abs(self.phi) < 1.0:
            raise ValidationError(f"AR(1) phi must satisfy |phi| < 1, got {self.phi}")
        if np.any(np.diff(self.emp_q) < 0):
            raise ValidationError("quantile map must be non-decreasing")

    def _hours(self) -> np.ndarray:
        return self.start_hour + np.arange(self.n_steps) * (self.step_s / 3600.0)

    def _raw_trend(self) -> np.ndarray:
        month_term = np.array([self.month_offsets[m] for m in self.months])
        return self.offset + _harmonic_design(self._hours()) @ self.trend_coeffs + month_term

    def trend_series(self) -> np.ndarray:
        """Deterministic reconstruction on the fitted grid (bounds applied)."""
        return self._finalize(self._raw_trend())

    def _finalize(self, values: np.ndarray) -> np.ndarray:
        if self.circular:
            return np.mod(values, 360.0)
        if self.sqrt_space:
            values = np.clip(values, 0.0, None) ** 2
        lo, hi = self.bounds
        values = np.clip(values, lo, hi)
        if self.support is not None:
            values = np.where(self.support, values, 0.0)
        return values

    def sample_residual(self, rng: np.random.Generator) -> np.ndarray:
        """Draw one AR(1) residual path mapped through the quantile table."""
        return self._sample_residual_batch(rng, 1)[0]

    def _sample_residual_batch(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """(count, n_steps) standardised AR(1) paths through the quantile map."""
        n = self.n_steps
        eps = rng.standard_normal((count, n))
        z = np.empty((count, n))
        z[:, 0] = eps[:, 0]
        scale = math.sqrt(max(0.0, 1.0 - self.phi**2))
        for k in range(1, n):
            z[:, k] = self.phi * z[:, k - 1] + scale * eps[:, k]
        return np.interp(z, self.gauss_q, self.emp_q)


def _harmonic_design(hours: np.ndarray) -> np.ndarray:
    cols = [np.ones_like(hours)]
    for period in _TREND_PERIODS_H:
        w = 2.0 * math.pi / period
        cols.append(np.sin(w * hours))
        cols.append(np.cos(w * hours))
    return np.column_stack(cols)


def _wrap_deg(values: np.ndarray) -> np.ndarray:
    """Wrap angles to [-180, 180)."""
    return (values + 180.0) % 360.0 - 180.0


def fit_variable_model(base: WeatherSeries, variable_id: str) -> VariableModel:
    """Fit the per-variable stochastic model on a typical-year base series.

    The trend is a least-squares fit of mean plus seasonal and diurnal
    harmonics, refined by per-calendar-month offsets; the detrended
    residual is modelled by lag-1 regression, and 99 empirical residual
    quantiles define the marginal quantile map.

    Raises:
        InsufficientDataError: base covers fewer than 7 days.
    """
    values = base.variable(variable_id)
    n = len(base)
    if n * base.step_s < 7 * 86400:
        raise InsufficientDataError(
            f"need at least 7 days of data to fit {variable_id}, "
            f"got {n * base.step_s / 86400:.2f} days"
        )
    circular = variable_id == "wind_dir"
    sqrt_space = variable_id in ("i_dn", "i_dh")
    if circular:
        rad = np.deg2rad(values)
        offset = math.degrees(math.atan2(np.mean(np.sin(rad)), np.mean(np.cos(rad)))) % 360.0
        target = _wrap_deg(values - offset)
    else:
        offset = 0.0
        target = np.sqrt(values) if sqrt_space else values

    stamps = base.timestamps()
    months = np.array([t.month for t in stamps])

    design = _harmonic_design(base.hours_from_midnight())
    coeffs, *_ = np.linalg.lstsq(design, target, rcond=None)
    resid = target - design @ coeffs

    # Month offsets start at the per-month residual means so the trend tracks
    # the base's monthly levels.  The residual keeps its full spectrum: the
    # calibration pass below owns monthly-mean unbiasedness, so no variance
    # has to be stripped from the stochastic part.
    month_offsets = {
        int(m): float(resid[months == m].mean()) for m in np.unique(months)
    }

    scale = max(1.0, float(np.max(np.abs(target))))
    degenerate = bool(np.std(resid) < 1e-12 * scale)
    if degenerate:
        phi, sigma = 0.0, 0.0
    else:
        num = float(resid[1:] @ resid[:-1])
        den = float(resid[:-1] @ resid[:-1])
        phi = 0.0 if den == 0.0 else num / den
        phi = float(np.clip(phi, -0.999, 0.999))
        innov = resid[1:] - phi * resid[:-1]
        sigma = float(np.std(innov))

    from scipy.stats import norm

    gauss_q = norm.ppf(_QUANTILE_PROBS)
    emp_q = np.quantile(resid, _QUANTILE_PROBS)
    emp_q = np.maximum.accumulate(emp_q)  # guard against fp jitter

    # Irradiance is identically zero while the sun is below the horizon;
    # restricting the generated signal to the base file's own (month, hour)
    # daylight support keeps nights and window edges dark.
    support = None
    if variable_id in ("i_dn", "i_dh"):
        sun_up = solar_zenith_cosine(base) > 0.0
        lit = {(t.month, t.hour) for t, v in zip(stamps, values) if v > 0.0}
        in_window = np.array([(t.month, t.hour) in lit for t in stamps])
        support = sun_up & in_window

    model = VariableModel(
        variable_id=variable_id,
        offset=offset,
        trend_coeffs=coeffs,
        month_offsets=month_offsets,
        phi=phi,
        sigma=sigma,
        gauss_q=gauss_q,
        emp_q=emp_q,
        bounds=PHYSICAL_BOUNDS[variable_id],
        circular=circular,
        sqrt_space=sqrt_space,
        n_steps=n,
        step_s=base.step_s,
        start_hour=float(base.hours_from_midnight()[0]),
        months=months,
        degenerate=degenerate,
        support=support,
    )
    if not circular and not degenerate:
        _calibrate_month_offsets(model, values)
    return model


def _calibrate_month_offsets(model: VariableModel, base_values: np.ndarray) -> None:
    """Tune month offsets so the clamped sampled process hits base monthly means.

    Clamping, daylight masking and the square-root back-transform all bend
    the mean of the generated signal away from trend + 0; a short
    deterministic Monte-Carlo fixed point absorbs that shift into the
    per-month trend offsets (calibrated at amplitude 1).
    """
    var_index = VARIABLE_IDS.index(model.variable_id)
    month_list = sorted(model.month_offsets)
    month_sel = {m: model.months == m for m in month_list}
    base_means = {m: float(base_values[month_sel[m]].mean()) for m in month_list}
    for iteration in range(3):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=[0xC0FFEE, var_index, iteration])
        )
        resid = model._sample_residual_batch(rng, 1024)
        sampled = model._finalize(model._raw_trend()[None, :] + resid)
        for m in month_list:
            sel = month_sel[m]
            diff = base_means[m] - float(sampled[:, sel].mean())
            if model.sqrt_space:
                # d(value)/d(offset) ~ 2 * sqrt(value) on the active support.
                slope = 2.0 * max(0.1, float(np.sqrt(sampled[:, sel]).mean()))
                model.month_offsets[m] += diff / slope
            else:
                model.month_offsets[m] += diff


def fit_all_models(base: WeatherSeries) -> dict[str, VariableModel]:
    """Fit all six variable models on one base series."""
    return {vid: fit_variable_model(base, vid) for vid in VARIABLE_IDS}


def sample_weather(
    models: dict[str, VariableModel],
    base: WeatherSeries,
    group_seeds: dict[str, int],
    amplitude: float = 1.0,
) -> WeatherSeries:
    """Generate one perturbed weather sample.

    Each variable equals its fitted trend plus ``amplitude`` times a freshly
    drawn quantile-mapped AR(1) residual, clamped to physical bounds (wind
    direction wrapped mod 360).  The result is a pure function of
    ``(models, base, group_seeds, amplitude)``; ``amplitude == 0`` returns
    the trend reconstruction exactly.
    """
    if amplitude < 0:
        raise ValidationError(f"amplitude must be >= 0, got {amplitude}")
    out = {}
    for vid in VARIABLE_IDS:
        model = models[vid]
        if model.n_steps != len(base) or model.step_s != base.step_s:
            raise ValidationError(
                f"model for {vid} was fitted on a different grid than the base series"
            )
        raw = model._raw_trend()
        if amplitude > 0:
            rng = np.random.default_rng(group_seeds[vid])
            raw = raw + amplitude * model.sample_residual(rng)
        out[vid] = model._finalize(raw)
    return WeatherSeries(
        start=base.start, step_s=base.step_s, site=base.site, **out
    )


# ---------------------------------------------------------------------------
# Pick-freeze sample plan
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlanRow:
    row_id: str
    block: str          # "A" or "C1".."C6"
    sample_index: int   # pairing index r in [0, n)
    group_seeds: dict[str, int]


@dataclass
class SamplePlan:
    """Pick-freeze layout over the six weather groups.

    Block A rows draw every group from root seed ``seeds_a[r]``; block C_i
    rows keep group i on ``seeds_a[r]`` and move every other group to
    ``seeds_b[r]``.  First-order indices for group i then come from the
    paired outputs of rows A[r] and C_i[r].
    """

    n: int
    master_seed: int
    groups: tuple[str, ...] = field(default=VARIABLE_IDS)
    seeds_a: list[int] = field(default_factory=list)
    seeds_b: list[int] = field(default_factory=list)
    rows: list[PlanRow] = field(default_factory=list)

    def rows_for_block(self, block: str) -> list[PlanRow]:
        return [r for r in self.rows if r.block == block]

    def to_json(self) -> str:
        payload = {
            "n": self.n,
            "master_seed": self.master_seed,
            "groups": list(self.groups),
            "seeds_a": self.seeds_a,
            "seeds_b": self.seeds_b,
            "rows": [
                {
                    "row_id": r.row_id,
                    "block": r.block,
                    "sample_index": r.sample_index,
                    "group_seeds": r.group_seeds,
                }
                for r in self.rows
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SamplePlan":
        payload = json.loads(text)
        rows = [
            PlanRow(
                row_id=r["row_id"],
                block=r["block"],
                sample_index=r["sample_index"],
                group_seeds=dict(r["group_seeds"]),
            )
            for r in payload["rows"]
        ]
        return cls(
            n=payload["n"],
            master_seed=payload["master_seed"],
            groups=tuple(payload["groups"]),
            seeds_a=payload["seeds_a"],
            seeds_b=payload["seeds_b"],
            rows=rows,
        )


def _group_seed(root: int, group_index: int) -> int:
    return int(np.random.SeedSequence(entropy=[root, group_index]).generate_state(1, np.uint64)[0])


def build_sample_plan(n: int, master_seed: int) -> SamplePlan:
    """Enumerate the n*(6+1) pick-freeze rows, deterministically from the seed."""
    if n < 2:
        raise ValidationError(f"sample plan needs n >= 2, got {n}")
    ss = np.random.SeedSequence(master_seed)
    roots = ss.generate_state(2 * n, np.uint64)
    seeds_a = [int(s) for s in roots[:n]]
    seeds_b = [int(s) for s in roots[n:]]

    rows = []
    for r in range(n):
        rows.append(
            PlanRow(
                row_id=f"A_{r:04d}",
                block="A",
                sample_index=r,
                group_seeds={
                    vid: _group_seed(seeds_a[r], g) for g, vid in enumerate(VARIABLE_IDS)
                },
            )
        )
    for g_sub, vid_sub in enumerate(VARIABLE_IDS):
        block = f"C{g_sub + 1}"
        for r in range(n):
            seeds = {}
            for g, vid in enumerate(VARIABLE_IDS):
                root = seeds_a[r] if g == g_sub else seeds_b[r]
                seeds[vid] = _group_seed(root, g)
            rows.append(
                PlanRow(
                    row_id=f"{block}_{r:04d}",
                    block=block,
                    sample_index=r,
                    group_seeds=seeds,
                )
            )
    return SamplePlan(
        n=n, master_seed=master_seed, seeds_a=seeds_a, seeds_b=seeds_b, rows=rows
    )


# ---------------------------------------------------------------------------
# Solar geometry
# ---------------------------------------------------------------------------


def solar_zenith_cosine(series: WeatherSeries) -> np.ndarray:
    """cos(zenith angle) per step from declination and hour-angle formulas."""
    site = series.site
    lat = math.radians(site.latitude)
    stamps = series.timestamps()
    doy = np.array([t.timetuple().tm_yday for t in stamps], dtype=float)
    clock_h = np.array(
        [t.hour + t.minute / 60.0 + t.second / 3600.0 for t in stamps]
    )
    decl = np.deg2rad(23.45) * np.sin(2.0 * math.pi * (284.0 + doy) / 365.0)
    b = 2.0 * math.pi * (doy - 1.0) / 365.0
    eot_min = 229.18 * (
        0.000075
        + 0.001868 * np.cos(b)
        - 0.032077 * np.sin(b)
        - 0.014615 * np.cos(2 * b)
        - 0.04089 * np.sin(2 * b)
    )
    solar_h = clock_h + (4.0 * (site.longitude - 15.0 * site.utc_offset) + eot_min) / 60.0
    hour_angle = np.deg2rad(15.0 * (solar_h - 12.0))
    return np.sin(lat) * np.sin(decl) + np.cos(lat) * np.cos(decl) * np.cos(hour_angle)


def global_horizontal(series: WeatherSeries) -> np.ndarray:
    """Global horizontal irradiance: I_gh = i_dn * max(0, cos zenith) + i_dh."""
    cosz = np.maximum(0.0, solar_zenith_cosine(series))
    return np.maximum(0.0, series.i_dn * cosz + series.i_dh)
