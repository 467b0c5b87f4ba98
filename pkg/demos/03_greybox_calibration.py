#!/usr/bin/env python3
"""Grey-box calibration: parameter recovery and model-order selection.

Part 1 fits the second-order RC model on data generated by the model
itself (known ground truth) and reports the recovered R_eq with its
uncertainty.  Part 2 calibrates both the first- and second-order models on
reference-simulator output and contrasts their residual autocorrelation,
which is the model-selection argument.
"""

from datetime import datetime

import numpy as np

from envsens.datasets import case_study, reference_weather
from envsens.greybox import (
    FitOptions,
    RcParameters,
    fit_first_order,
    fit_ml,
    generate_rc_dataset,
)
from envsens.inference import infer_req, residual_autocorrelation
from envsens.network import build_thermal_network
from envsens.simulate import RunWindow, extract_subset, simulate

# --- Part 1: self-consistency on model-generated data ----------------------

truth = RcParameters(r_o=4.2e-3, r_i=1.1e-3, c_w=2.5e7, c_i=3.0e6,
                     a_w=3.0, sigma_w=5e-4, sigma_i=1e-3, sigma_eps=0.2)
n = 15 * 144
hours = np.arange(n) / 6.0
rng = np.random.default_rng(7)
t_out = 4 + 4 * np.sin(2 * np.pi * (hours - 9) / 24) + np.cumsum(rng.normal(0, 0.05, n))
i_sol = 250 * np.clip(np.sin(np.pi * ((hours % 24) - 8) / 9), 0, None)
t_set = np.where(((hours % 24) >= 6) & ((hours % 24) < 22), 20.0, 17.0)
ds = generate_rc_dataset(truth, t_out, i_sol, t_set, datetime(2009, 1, 2), 600, seed=7)

est = fit_ml(ds, FitOptions(n_restarts=4, seed=1))
req = infer_req(est)
print("self-consistency fit on 15 days of model-generated data:")
print(f"  true R_eq      = {truth.r_eq * 1000:.3f} K/kW")
print(f"  estimated R_eq = {req.r_eq * 1000:.3f} +/- {req.sigma * 1000:.3f} K/kW")
print(f"  relative error = {abs(req.r_eq - truth.r_eq) / truth.r_eq * 100:.2f} %")
print(f"  converged      = {est.converged}")

# --- Part 2: model order against the reference simulator -------------------

network = build_thermal_network(case_study())
run = RunWindow(start=datetime(2008, 11, 15), end=datetime(2009, 2, 15))
reference = simulate(network, reference_weather(), run)
subset = extract_subset(reference, datetime(2009, 1, 2), 3)

first = fit_first_order(subset, n_restarts=3, seed=1)
second = fit_ml(subset, FitOptions(n_restarts=3, seed=1))

print("\nresidual whiteness on a 3-day reference subset (clean output):")
for label, residuals in (("first-order ", first.residuals),
                         ("second-order", second.residuals)):
    acf = residual_autocorrelation(residuals, max_lag=50)
    verdict = "white" if acf["white"] else "NOT white"
    print(f"  {label}: lag-1 ACF = {acf['acf'][1]:+.3f}, "
          f"{acf['n_exceeding']}/50 lags outside the band -> {verdict}")
print("the first-order model misses the envelope dynamics; the second-order")
print("model's innovations pass the whiteness check, so it is the one used.")
