"""Reproducible experiment pipeline: weather fan-out, sweep, reports.

Stages communicate only through files under the configured output
directory, tracked in ``manifest.json`` (single writer: the orchestrator).
Every random draw derives from the master seed, per-task seeds are hashed
from (master seed, row, duration), so results are independent of worker
count and arrival order.  Artifacts are plain CSV/JSON with deterministic
formatting; re-running a completed stage with an unchanged configuration is
a hash-checked no-op.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from .building import load_building
from .errors import ConfigError, EnvsensError, NonConvergedError, StageError
from .greybox import FitOptions, fit_ml
from .inference import ReqEstimate, infer_req, interpretability, iso9869_convergence
from .network import build_thermal_network
from .sensan import run_sensitivity, summarize_variability
from .simulate import (
    RunWindow,
    TargetConditions,
    add_measurement_noise,
    compute_target_req,
    extract_subset,
    simulate,
)
from .weather import (
    GENEVA,
    SamplePlan,
    Site,
    build_sample_plan,
    fit_all_models,
    load_weather,
    sample_weather,
    write_weather,
)

DEFAULT_DURATIONS = (2, 3, 5, 8, 11, 15, 25)

_SEED_TAG_NOISE = 1
_SEED_TAG_FIT = 2


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


@dataclass
class ExperimentConfig:
    """Validated experiment configuration (paths resolved against the config file)."""

    building_spec: Path
    base_weather: Path
    output_dir: Path
    n_samples: int = 32
    master_seed: int = 1
    durations: tuple = DEFAULT_DURATIONS
    subset_start: datetime | None = None
    run_start: datetime = datetime(2008, 11, 15)
    run_end: datetime = datetime(2009, 2, 15)
    step_s: int = 600
    noise: bool = True
    amplitude: float = 1.0
    fit: dict = field(default_factory=dict)
    target: dict = field(default_factory=dict)
    site: Site = GENEVA

    def __post_init__(self):
        if self.subset_start is None:
            year = self.run_start.year + (1 if self.run_start.month >= 7 else 0)
            self.subset_start = datetime(year, 1, 2)
        if self.n_samples < 2:
            raise ConfigError(f"n_samples must be >= 2, got {self.n_samples}")
        durs = tuple(self.durations)
        if any(b <= a for a, b in zip(durs, durs[1:])):
            raise ConfigError(f"durations must be strictly increasing, got {durs}")
        self.durations = durs
        if self.run_end <= self.run_start:
            raise ConfigError("run window end must be after start")
        horizon = self.subset_start + timedelta(days=float(max(durs)))
        if self.subset_start < self.run_start or horizon > self.run_end:
            raise ConfigError(
                "subset_start + max duration must fall inside the run window"
            )
        if not self.building_spec.exists():
            raise ConfigError(f"building spec not found: {self.building_spec}")
        if not self.base_weather.exists():
            raise ConfigError(f"base weather not found: {self.base_weather}")

    def fit_options(self, seed: int) -> FitOptions:
        opts = FitOptions(seed=seed)
        for key, value in self.fit.items():
            if not hasattr(opts, key):
                raise ConfigError(f"unknown fit option {key!r}")
            setattr(opts, key, value)
        opts.seed = seed
        return opts

    def canonical_dict(self) -> dict:
        return {
            "building_spec": str(self.building_spec),
            "base_weather": str(self.base_weather),
            "n_samples": self.n_samples,
            "master_seed": self.master_seed,
            "durations": list(self.durations),
            "subset_start": self.subset_start.isoformat(),
            "run_start": self.run_start.isoformat(),
            "run_end": self.run_end.isoformat(),
            "step_s": self.step_s,
            "noise": self.noise,
            "amplitude": self.amplitude,
            "fit": dict(sorted(self.fit.items())),
            "target": dict(sorted(self.target.items())),
            "site": [self.site.latitude, self.site.longitude, self.site.utc_offset],
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def load_config(path, seed_override: int | None = None) -> ExperimentConfig:
    """Parse and validate an experiment config JSON file.

    Raises:
        ConfigError: missing keys, unreadable paths or invariant violations.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    base = path.parent
    try:
        window = raw.get("run_window", {})
        site_raw = raw.get("site")
        site = (
            Site(site_raw["latitude"], site_raw["longitude"], site_raw["utc_offset"])
            if site_raw
            else GENEVA
        )
        cfg = ExperimentConfig(
            building_spec=(base / raw["building_spec"]).resolve(),
            base_weather=(base / raw["base_weather"]).resolve(),
            output_dir=(base / raw.get("output_dir", "out")).resolve(),
            n_samples=int(raw.get("n_samples", 32)),
            master_seed=int(
                seed_override if seed_override is not None else raw.get("master_seed", 1)
            ),
            durations=tuple(raw.get("durations", DEFAULT_DURATIONS)),
            subset_start=(
                datetime.fromisoformat(raw["subset_start"])
                if "subset_start" in raw
                else None
            ),
            run_start=datetime.fromisoformat(window.get("start", "2008-11-15")),
            run_end=datetime.fromisoformat(window.get("end", "2009-02-15")),
            step_s=int(window.get("step_s", 600)),
            noise=bool(raw.get("noise", True)),
            amplitude=float(raw.get("amplitude", 1.0)),
            fit=dict(raw.get("fit", {})),
            target=dict(raw.get("target", {})),
            site=site,
        )
    except KeyError as exc:
        raise ConfigError(f"config missing required key: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc
    return cfg


def _derive_seed(master_seed: int, tag: int, row_ordinal: int, duration: int = 0) -> int:
    ss = np.random.SeedSequence(entropy=[master_seed, tag, row_ordinal, duration])
    return int(ss.generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------


class Manifest:
    """Single-writer record of stage status, artifacts and timings."""

    def __init__(self, output_dir: Path):
        self.path = Path(output_dir) / "manifest.json"
        if self.path.exists():
            self.data = json.loads(self.path.read_text(encoding="utf-8"))
        else:
            self.data = {"stages": {}}

    def stage(self, name: str) -> dict:
        return self.data["stages"].get(name, {})

    def stage_done(self, name: str, config_hash: str) -> bool:
        st = self.stage(name)
        return st.get("status") == "done" and st.get("config_hash") == config_hash

    def record(self, name: str, config_hash: str, artifacts: dict, *,
               status: str = "done", wall_s: float = 0.0, extra: dict | None = None):
        entry = {
            "status": status,
            "config_hash": config_hash,
            "artifacts": {k: str(v) for k, v in artifacts.items()},
            "wall_s": wall_s,
        }
        if extra:
            entry.update(extra)
        self.data["stages"][name] = entry
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n",
                       encoding="utf-8")
        os.replace(tmp, self.path)

    def artifact(self, stage: str, key: str) -> Path:
        st = self.stage(stage)
        try:
            return Path(st["artifacts"][key])
        except KeyError as exc:
            raise StageError(f"stage {stage!r} has no artifact {key!r}; run it first") from exc


# ---------------------------------------------------------------------------
# Stage: generate-weather
# ---------------------------------------------------------------------------


def stage_generate_weather(cfg: ExperimentConfig, manifest: Manifest) -> SamplePlan:
    """Fit the six variable models and write the n*(6+1) sample files."""
    t0 = time.time()
    chash = cfg.config_hash()
    wdir = cfg.output_dir / "weather"
    plan_path = wdir / "plan.json"

    if plan_path.exists():
        payload = json.loads(plan_path.read_text(encoding="utf-8"))
        if payload.get("config_hash") == chash:
            plan = SamplePlan.from_json(json.dumps(payload["plan"]))
            if all((wdir / f"w_{row.row_id}.csv").exists() for row in plan.rows):
                manifest.record(
                    "generate-weather", chash, {"plan": plan_path, "dir": wdir},
                    wall_s=time.time() - t0, extra={"cache_hit": True},
                )
                return plan

    wdir.mkdir(parents=True, exist_ok=True)
    base = load_weather(cfg.base_weather, site=cfg.site)
    models = fit_all_models(base)
    plan = build_sample_plan(cfg.n_samples, cfg.master_seed)
    for row in plan.rows:
        sample = sample_weather(models, base, row.group_seeds, amplitude=cfg.amplitude)
        write_weather(sample, wdir / f"w_{row.row_id}.csv")
    payload = {"config_hash": chash, "plan": json.loads(plan.to_json())}
    plan_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                         encoding="utf-8")
    manifest.record(
        "generate-weather", chash, {"plan": plan_path, "dir": wdir},
        wall_s=time.time() - t0, extra={"cache_hit": False, "n_files": len(plan.rows)},
    )
    return plan


# ---------------------------------------------------------------------------
# Stage: target
# ---------------------------------------------------------------------------


def stage_target(cfg: ExperimentConfig, manifest: Manifest) -> dict:
    """Compute and persist the ground-truth target R*_eq of the building."""
    t0 = time.time()
    chash = cfg.config_hash()
    tdir = cfg.output_dir / "target"
    tpath = tdir / "target.json"
    if manifest.stage_done("target", chash) and tpath.exists():
        return json.loads(tpath.read_text(encoding="utf-8"))

    spec = load_building(cfg.building_spec)
    network = build_thermal_network(spec)
    wind_cfg = cfg.target.get("wind", "mean")
    if wind_cfg == "mean":
        base = load_weather(cfg.base_weather, site=cfg.site)
        epochs = base.start.timestamp() + np.arange(len(base)) * float(base.step_s)
        lo = cfg.run_start.timestamp()
        hi = cfg.run_end.timestamp()
        mask = (epochs >= lo) & (epochs <= hi)
        wind = float(base.wind_speed[mask].mean()) if mask.any() else float(base.wind_speed.mean())
    elif wind_cfg == "file":
        base = load_weather(cfg.base_weather, site=cfg.site)
        wind = base.wind_speed
    else:
        wind = float(wind_cfg)
    conditions = TargetConditions(
        t_out=float(cfg.target.get("t_out", 2.0)),
        wind=wind,
        t_set=float(cfg.target.get("t_set", 20.0)),
    )
    report = compute_target_req(
        network, conditions, days=int(cfg.target.get("days", 30)), step_s=cfg.step_s
    )
    payload = report.to_dict()
    payload["config_hash"] = chash
    payload["warning_low_r2"] = bool(report.r_squared < 0.99)
    tdir.mkdir(parents=True, exist_ok=True)
    tpath.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                     encoding="utf-8")
    manifest.record("target", chash, {"target": tpath}, wall_s=time.time() - t0)
    return payload


# ---------------------------------------------------------------------------
# Stage: sweep
# ---------------------------------------------------------------------------


def _sweep_task(task: dict) -> dict:
    """Simulate one plan row and calibrate every duration subset (pure)."""
    result = {
        "row_id": task["row_id"],
        "block": task["block"],
        "sample_index": task["sample_index"],
        "config_hash": task["config_hash"],
        "status": "ok",
        "durations": {},
    }
    try:
        spec = load_building(task["building_spec"])
        network = build_thermal_network(spec)
        weather = load_weather(
            task["weather_csv"],
            site=Site(*task["site"]),
        )
        run = RunWindow(
            start=datetime.fromisoformat(task["run_start"]),
            end=datetime.fromisoformat(task["run_end"]),
            step_s=task["step_s"],
        )
        ds = simulate(network, weather, run)
        ds.meta["spec_hash"] = task["config_hash"]
        if task["noise"]:
            ds = add_measurement_noise(ds, task["noise_seed"])
        subset_start = datetime.fromisoformat(task["subset_start"])
        target = task["target_r_eq"]

        w_epochs = weather.start.timestamp() + np.arange(len(weather)) * float(weather.step_s)
        for duration, fit_seed in zip(task["durations"], task["fit_seeds"]):
            entry = {"status": "ok"}
            try:
                subset = extract_subset(ds, subset_start, duration)
                opts = FitOptions(seed=fit_seed)
                for key, value in task["fit_overrides"].items():
                    setattr(opts, key, value)
                opts.seed = fit_seed
                est = fit_ml(subset, opts)
                if not est.converged:
                    raise NonConvergedError(
                        f"fit not converged (flags: {est.flags})"
                    )
                r_o, r_i = est.theta_ml.r_o, est.theta_ml.r_i
                req = infer_req(est)
                entry.update(
                    r_eq=req.r_eq,
                    sigma=req.sigma,
                    interpretability=interpretability(req.r_eq, req.sigma, target),
                    converged=True,
                    log_likelihood=est.log_likelihood,
                    r_o=r_o,
                    r_i=r_i,
                )
            except EnvsensError as exc:
                entry = {"status": "failed", "reason": f"{type(exc).__name__}: {exc}"}
            lo = subset_start.timestamp()
            hi = (subset_start + timedelta(days=float(duration))).timestamp()
            mask = (w_epochs >= lo) & (w_epochs < hi)
            entry["t_out_mean"] = float(weather.t_out[mask].mean())
            entry["wind_mean"] = float(weather.wind_speed[mask].mean())
            result["durations"][str(duration)] = entry
    except EnvsensError as exc:
        result["status"] = "failed"
        result["reason"] = f"{type(exc).__name__}: {exc}"
    return result


ESTIMATE_COLUMNS = (
    "sample_id", "block", "sample_index", "duration_days", "status",
    "r_eq", "sigma", "interpretability", "converged", "log_likelihood",
    "t_out_mean", "wind_mean",
)


def stage_sweep(
    cfg: ExperimentConfig,
    manifest: Manifest,
    workers: int = 1,
    resume: bool = False,
) -> Path:
    """Run simulate/noise/subset/fit for every plan row; write estimates.csv.

    Rows already present on disk with the current config hash are reused
    when ``resume`` is set (or when the whole stage is already done);
    otherwise stale row files are recomputed.

    Raises:
        StageError: weather or target stage missing.
    """
    t0 = time.time()
    chash = cfg.config_hash()
    if not manifest.stage_done("generate-weather", chash):
        raise StageError("sweep requires the generate-weather stage (same config)")
    if not manifest.stage_done("target", chash):
        raise StageError("sweep requires the target stage (same config)")

    plan_payload = json.loads(
        manifest.artifact("generate-weather", "plan").read_text(encoding="utf-8")
    )
    plan = SamplePlan.from_json(json.dumps(plan_payload["plan"]))
    target = json.loads(
        manifest.artifact("target", "target").read_text(encoding="utf-8")
    )
    wdir = manifest.artifact("generate-weather", "dir")
    sdir = cfg.output_dir / "sweep"
    rows_dir = sdir / "rows"
    rows_dir.mkdir(parents=True, exist_ok=True)
    estimates_path = sdir / "estimates.csv"

    if manifest.stage_done("sweep", chash) and estimates_path.exists():
        return estimates_path

    tasks = []
    results = {}
    for ordinal, row in enumerate(plan.rows):
        row_path = rows_dir / f"{row.row_id}.json"
        if resume and row_path.exists():
            existing = json.loads(row_path.read_text(encoding="utf-8"))
            if existing.get("config_hash") == chash:
                results[row.row_id] = existing
                continue
        tasks.append(
            {
                "row_id": row.row_id,
                "block": row.block,
                "sample_index": row.sample_index,
                "config_hash": chash,
                "building_spec": str(cfg.building_spec),
                "weather_csv": str(wdir / f"w_{row.row_id}.csv"),
                "site": [cfg.site.latitude, cfg.site.longitude, cfg.site.utc_offset],
                "run_start": cfg.run_start.isoformat(),
                "run_end": cfg.run_end.isoformat(),
                "step_s": cfg.step_s,
                "noise": cfg.noise,
                "noise_seed": _derive_seed(cfg.master_seed, _SEED_TAG_NOISE, ordinal),
                "subset_start": cfg.subset_start.isoformat(),
                "durations": list(cfg.durations),
                "fit_seeds": [
                    _derive_seed(cfg.master_seed, _SEED_TAG_FIT, ordinal, int(d))
                    for d in cfg.durations
                ],
                "fit_overrides": dict(cfg.fit),
                "target_r_eq": float(target["r_eq_star"]),
            }
        )

    def _persist(res: dict) -> None:
        # Written as soon as a result arrives so an interrupted sweep can
        # resume from the completed rows.
        row_path = rows_dir / f"{res['row_id']}.json"
        tmp = row_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(res, indent=2, sort_keys=True) + "\n",
                       encoding="utf-8")
        os.replace(tmp, row_path)
        results[res["row_id"]] = res

    if tasks:
        if workers > 1:
            with Pool(processes=workers) as pool:
                for res in pool.imap_unordered(_sweep_task, tasks):
                    _persist(res)
        else:
            for task in tasks:
                _persist(_sweep_task(task))

    # Assemble the estimates table, sorted for byte determinism, and collect
    # one terminal status per (row, duration) for the manifest.
    lines = []
    row_status: dict[str, dict] = {}
    n_failed = 0
    for row in plan.rows:
        res = results.get(row.row_id)
        if res is None:
            res = json.loads((rows_dir / f"{row.row_id}.json").read_text(encoding="utf-8"))
        statuses = {}
        if res["status"] != "ok":
            n_failed += len(cfg.durations)
            for d in cfg.durations:
                statuses[str(d)] = {"status": "failed",
                                    "reason": res.get("reason", "")}
                lines.append([res["row_id"], res["block"], res["sample_index"],
                              d, "failed", None, None, None, None, None, None, None])
            row_status[row.row_id] = statuses
            continue
        for d in cfg.durations:
            entry = res["durations"][str(d)]
            if entry["status"] == "ok":
                statuses[str(d)] = {"status": "ok"}
                lines.append([
                    res["row_id"], res["block"], res["sample_index"], d, "ok",
                    entry["r_eq"], entry["sigma"], entry["interpretability"],
                    entry["converged"], entry["log_likelihood"],
                    entry["t_out_mean"], entry["wind_mean"],
                ])
            else:
                n_failed += 1
                statuses[str(d)] = {"status": "failed",
                                    "reason": entry.get("reason", "")}
                lines.append([
                    res["row_id"], res["block"], res["sample_index"], d, "failed",
                    None, None, None, None, None,
                    entry.get("t_out_mean"), entry.get("wind_mean"),
                ])
        row_status[row.row_id] = statuses
    lines.sort(key=lambda r: (r[0], float(r[3])))
    with open(estimates_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(ESTIMATE_COLUMNS)
        for line in lines:
            writer.writerow([_fmt(v) for v in line])

    manifest.record(
        "sweep", chash,
        {"estimates": estimates_path, "rows": rows_dir},
        wall_s=time.time() - t0,
        extra={"n_rows": len(plan.rows), "n_fits_failed": n_failed,
               "row_status": row_status},
    )
    return estimates_path


# ---------------------------------------------------------------------------
# Stage: report
# ---------------------------------------------------------------------------


def _read_estimates(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def stage_report(cfg: ExperimentConfig, manifest: Manifest) -> dict:
    """Emit variability, sensitivity, convergence and scatter tables."""
    t0 = time.time()
    chash = cfg.config_hash()
    if not manifest.stage_done("sweep", chash):
        raise StageError("report requires a completed sweep stage (same config)")
    estimates_path = manifest.artifact("sweep", "estimates")
    rows = _read_estimates(estimates_path)
    if not rows:
        raise StageError("estimates table is empty")

    target = json.loads(
        manifest.artifact("target", "target").read_text(encoding="utf-8")
    )
    target_r_eq = float(target["r_eq_star"])
    plan_payload = json.loads(
        manifest.artifact("generate-weather", "plan").read_text(encoding="utf-8")
    )
    plan = SamplePlan.from_json(json.dumps(plan_payload["plan"]))

    rdir = cfg.output_dir / "report"
    rdir.mkdir(parents=True, exist_ok=True)

    ok_rows = [r for r in rows if r["status"] == "ok"]
    if not ok_rows:
        raise StageError("no successful estimates to report on")

    # Variability per duration over every successful row.
    buckets: dict[float, list[ReqEstimate]] = {}
    for r in ok_rows:
        buckets.setdefault(float(r["duration_days"]), []).append(
            ReqEstimate(
                r_eq=float(r["r_eq"]), sigma=float(r["sigma"]),
                duration_days=float(r["duration_days"]),
                weather_sample_id=r["sample_id"],
            )
        )
    variability = summarize_variability(buckets, target_r_eq)
    vpath = rdir / "variability.csv"
    with open(vpath, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow([
            "duration_days", "n", "median", "std", "q05", "q95",
            "fraction_within_10pct_of_median", "fraction_interpretability_ge_05",
        ])
        for v in variability:
            writer.writerow([_fmt(x) for x in (
                v.duration_days, v.n, v.median, v.std, v.q05, v.q95,
                v.fraction_within_10pct_of_median, v.fraction_interpretability_ge_05,
            )])

    # Grouped sensitivity per duration.
    spath = rdir / "sensitivity.csv"
    outputs_by_duration: dict[float, dict[str, float | None]] = {}
    for r in rows:
        d = float(r["duration_days"])
        outputs_by_duration.setdefault(d, {})[r["sample_id"]] = (
            float(r["r_eq"]) if r["status"] == "ok" else None
        )
    with open(spath, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow([
            "duration_days", "group", "s1", "se", "partial_variance",
            "total_variance", "n_effective", "unreliable", "unattributed_fraction",
        ])
        for d in sorted(outputs_by_duration):
            try:
                report = run_sensitivity(
                    outputs_by_duration[d], plan, d, seed=cfg.master_seed
                )
            except EnvsensError:
                writer.writerow([_fmt(d), "all", "", "", "", "", "", "undefined", ""])
                continue
            for gi in report.indices:
                writer.writerow([_fmt(x) for x in (
                    d, gi.group, gi.s1, gi.se, gi.partial_variance,
                    report.total_variance, gi.n_effective, report.unreliable,
                    report.unattributed_fraction,
                )])

    # ISO-9869-style convergence per plan row.
    cpath = rdir / "convergence.csv"
    per_row: dict[str, list] = {}
    for r in ok_rows:
        per_row.setdefault(r["sample_id"], []).append(r)
    with open(cpath, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow([
            "sample_id", "status", "criterion_min_duration_met", "criterion_24h_met",
            "criterion_two_thirds_met", "first_pass_duration",
        ])
        for row in plan.rows:
            entries = sorted(
                per_row.get(row.row_id, []), key=lambda r: float(r["duration_days"])
            )
            if len(entries) < 2:
                writer.writerow([row.row_id, "not-assessable", "", "", "", ""])
                continue
            series = [
                ReqEstimate(
                    r_eq=float(e["r_eq"]), sigma=float(e["sigma"]),
                    duration_days=float(e["duration_days"]),
                )
                for e in entries
            ]
            verdict = iso9869_convergence(series)
            writer.writerow([_fmt(x) for x in (
                row.row_id, "ok", verdict.criterion_min_duration_met,
                verdict.criterion_24h_met, verdict.criterion_two_thirds_met,
                verdict.first_pass_duration,
            )])

    # Plot-ready long table: one row per (sample, duration).
    ppath = rdir / "scatter.csv"
    with open(ppath, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow([
            "sample_id", "duration_days", "r_eq", "sigma", "interpretability",
            "t_out_mean", "wind_mean",
        ])
        for r in rows:
            if r["status"] != "ok":
                continue
            writer.writerow([
                r["sample_id"], r["duration_days"], r["r_eq"], r["sigma"],
                r["interpretability"], r["t_out_mean"], r["wind_mean"],
            ])

    artifacts = {
        "variability": vpath, "sensitivity": spath,
        "convergence": cpath, "scatter": ppath,
    }
    manifest.record("report", chash, artifacts, wall_s=time.time() - t0)
    return {k: str(v) for k, v in artifacts.items()}


def run_all(cfg: ExperimentConfig, workers: int = 1, resume: bool = False) -> dict:
    """Full pipeline: weather, target, sweep, report."""
    manifest = Manifest(cfg.output_dir)
    stage_generate_weather(cfg, manifest)
    stage_target(cfg, manifest)
    stage_sweep(cfg, manifest, workers=workers, resume=resume)
    return stage_report(cfg, manifest)
