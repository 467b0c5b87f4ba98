#!/usr/bin/env python3
"""Small end-to-end repeatability experiment.

Runs the full pipeline (weather fan-out, target, calibration sweep,
reports) at a desk-friendly scale and prints the variability and
convergence picture per calibration duration.  The same experiment is
available from the command line:

    envsens all --config demo_out/sweep/config.json

Expect five to ten minutes of runtime: 12 x 7 reference simulations and
three calibrations each.
"""

import csv
import json
from pathlib import Path

from envsens.building import save_building
from envsens.datasets import case_study, reference_weather
from envsens.pipeline import load_config, run_all
from envsens.weather import write_weather

work = Path("demo_out/sweep")
work.mkdir(parents=True, exist_ok=True)

save_building(case_study(), work / "building.json")
write_weather(reference_weather(), work / "weather.csv")
config = {
    "building_spec": "building.json",
    "base_weather": "weather.csv",
    "output_dir": "out",
    "n_samples": 12,
    "master_seed": 1234,
    "durations": [2, 5, 11],
    "fit": {"n_restarts": 3},
}
(work / "config.json").write_text(json.dumps(config, indent=2))

cfg = load_config(work / "config.json")
artifacts = run_all(cfg)

target = json.loads((cfg.output_dir / "target" / "target.json").read_text())
print(f"target R*_eq = {target['r_eq_star'] * 1000:.3f} K/kW "
      f"(R2 = {target['r_squared']:.5f})")

print("\nvariability of the R_eq estimates per calibration duration:")
with open(artifacts["variability"], newline="") as f:
    for row in csv.DictReader(f):
        print(f"  {float(row['duration_days']):4.0f} days: "
              f"median {float(row['median']) * 1000:.3f} K/kW, "
              f"std {float(row['std']) * 1000:.3f}, "
              f"interpretability >= 0.5 for "
              f"{float(row['fraction_interpretability_ge_05']) * 100:.0f}% of fits")

print("\nfirst-order sensitivity indices (grouped, per duration):")
with open(artifacts["sensitivity"], newline="") as f:
    for row in csv.DictReader(f):
        if row["group"] == "all":
            print(f"  {float(row['duration_days']):4.0f} days: too few paired fits, "
                  "indices undefined")
        elif row["group"] in ("t_out", "wind_speed"):
            print(f"  {float(row['duration_days']):4.0f} days  {row['group']:11s} "
                  f"s1 = {float(row['s1']):+.2f} (se {float(row['se']):.2f})")
print("\nnote: single-digit sample counts make the indices order-of-magnitude")
print("statements only; the acceptance suite runs n = 32.")
print(f"\nreport files under {cfg.output_dir / 'report'}")
