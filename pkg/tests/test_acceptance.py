"""Acceptance criteria, one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s`.  The desk-scale sweep
(criteria 5, 8 and the data behind 4) is computed once per module; on a
single core it takes about 15 minutes.
"""

import csv
import json
import math
import time
from datetime import datetime
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner
from scipy.integrate import quad
from scipy.linalg import expm
from scipy.stats import multivariate_normal, norm

from envsens.building import save_building
from envsens.cli import main as cli_main
from envsens.datasets import case_study, reference_weather
from envsens.errors import NotAssessableError
from envsens.greybox import (
    FitOptions,
    RcParameters,
    continuous_matrices,
    discretize,
    fit_ml,
    generate_rc_dataset,
    kalman_loglik,
)
from envsens.inference import (
    ReqEstimate,
    infer_req,
    interpretability,
    iso9869_convergence,
)
from envsens.network import build_thermal_network
from envsens.pipeline import load_config, run_all
from envsens.sensan import first_order_group_index
from envsens.simulate import SimDataset, TargetConditions, compute_target_req
from envsens.weather import write_weather

DESK_SEED = 2009
DESK_N = 32
DURATIONS = (2, 3, 5, 8, 11, 15, 25)


def report(criterion, detail):
    print(f"\nACCEPTANCE {criterion}: PASS ({detail})")


@pytest.fixture(scope="module", autouse=True)
def _jit_warmup():
    """Compile the numba kernels once so runtime budgets measure compute."""
    theta = RcParameters(r_o=4e-3, r_i=1e-3, c_w=2e7, c_i=2e6, a_w=2.0,
                         sigma_w=1e-3, sigma_i=1e-3, sigma_eps=0.2)
    n = 48
    ds = SimDataset(start=datetime(2009, 1, 2), step_s=600,
                    t_in=np.full(n, 18.0), t_out=np.zeros(n),
                    i_sol=np.zeros(n), p_h=np.full(n, 500.0))
    kalman_loglik(theta, ds)
    generate_rc_dataset(theta, np.zeros(8), np.zeros(8), np.full(8, 20.0),
                        datetime(2009, 1, 2), 600, seed=0)


@pytest.fixture(scope="module")
def desk_sweep(tmp_path_factory):
    """Full desk-scale pipeline run: n = 32, all seven durations."""
    work = tmp_path_factory.mktemp("desk")
    save_building(case_study(), work / "building.json")
    write_weather(reference_weather(), work / "weather.csv")
    raw = {
        "building_spec": "building.json",
        "base_weather": "weather.csv",
        "output_dir": "out",
        "n_samples": DESK_N,
        "master_seed": DESK_SEED,
        "durations": list(DURATIONS),
        "fit": {"n_restarts": 3},
    }
    (work / "config.json").write_text(json.dumps(raw))
    cfg = load_config(work / "config.json")
    t0 = time.time()
    artifacts = run_all(cfg)
    elapsed = time.time() - t0
    target = json.loads((cfg.output_dir / "target" / "target.json").read_text())
    with open(cfg.output_dir / "sweep" / "estimates.csv", newline="") as f:
        estimates = list(csv.DictReader(f))
    with open(artifacts["sensitivity"], newline="") as f:
        sensitivity = list(csv.DictReader(f))
    with open(artifacts["variability"], newline="") as f:
        variability = list(csv.DictReader(f))
    return {
        "cfg": cfg,
        "target": target,
        "estimates": estimates,
        "sensitivity": sensitivity,
        "variability": variability,
        "elapsed": elapsed,
    }


# ---------------------------------------------------------------------------
# Criterion 1: Kalman innovations likelihood vs dense joint Gaussian
# ---------------------------------------------------------------------------


def _random_theta(rng):
    lo = np.array([1e-3, 1e-4, 1e6, 1e5, 0.1, 1e-4, 1e-4, 0.05])
    hi = np.array([5e-2, 1e-2, 1e8, 1e7, 10.0, 1e-2, 1e-2, 0.5])
    vec = np.exp(rng.uniform(np.log(lo), np.log(hi)))
    return RcParameters(*vec, x0=(18.0, 19.0), p0=0.7)


def _dense_loglik(theta, ds):
    a, b, sigma = continuous_matrices(theta)
    ad, bd, qd = discretize(a, b, sigma, float(ds.step_s))
    n = len(ds)
    u = ds.inputs()
    means = np.empty((n, 2))
    x = np.array(theta.x0, float)
    for k in range(n):
        means[k] = x
        x = ad @ x + bd @ u[k]
    covs = [theta.p0 * np.eye(2)]
    for _ in range(1, n):
        covs.append(ad @ covs[-1] @ ad.T + qd)
    c = np.array([0.0, 1.0])
    cov_y = np.empty((n, n))
    for j in range(n):
        m = covs[j]
        for k in range(j, n):
            cov_y[j, k] = cov_y[k, j] = c @ m @ c
            m = m @ ad.T
    cov_y += theta.sigma_eps**2 * np.eye(n)
    return multivariate_normal(mean=means[:, 1], cov=cov_y).logpdf(ds.t_in)


def test_criterion_01_kalman_matches_dense_gaussian():
    rng = np.random.default_rng(101)
    t0 = time.time()
    worst = 0.0
    for _ in range(20):
        theta = _random_theta(rng)
        n = 50
        ds = SimDataset(
            start=datetime(2009, 1, 2), step_s=600,
            t_in=19.0 + np.cumsum(rng.normal(0.0, 0.1, n)),
            t_out=5.0 + rng.normal(0.0, 2.0, n),
            i_sol=np.clip(rng.normal(100.0, 80.0, n), 0.0, None),
            p_h=np.clip(rng.normal(1500.0, 700.0, n), 0.0, None),
        )
        ll, _, _ = kalman_loglik(theta, ds)
        ll_dense = _dense_loglik(theta, ds)
        worst = max(worst, abs(ll - ll_dense) / abs(ll_dense))
    elapsed = time.time() - t0
    assert worst < 1e-8
    assert elapsed < 5.0
    report(1, f"max rel diff {worst:.2e} over 20 systems, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# Criterion 2: discretisation vs sub-stepped recursion; semigroup property
# ---------------------------------------------------------------------------


def _substep_oracle(a, b, sigma, dt, m=10_000):
    d = dt / m
    ad_small = expm(a * d)
    eye = np.eye(a.shape[0])
    gi_small = 0.5 * d * (eye + ad_small)
    q_small = 0.5 * d * (sigma + ad_small @ sigma @ ad_small.T)
    ad_acc, s_acc, q_acc = eye.copy(), np.zeros_like(a), np.zeros_like(a)
    for _ in range(m):
        q_acc = ad_small @ q_acc @ ad_small.T + q_small
        s_acc = ad_small @ s_acc + gi_small
        ad_acc = ad_small @ ad_acc
    return ad_acc, s_acc @ b, q_acc


def test_criterion_02_discretisation_oracle():
    rng = np.random.default_rng(202)
    t0 = time.time()
    worst = 0.0
    worst_semi = 0.0
    for _ in range(20):
        theta = _random_theta(rng)
        a, b, sigma = continuous_matrices(theta)
        got = discretize(a, b, sigma, 600.0)
        want = _substep_oracle(a, b, sigma, 600.0)
        for g, w in zip(got, want):
            scale = max(float(np.max(np.abs(w))), 1e-300)
            worst = max(worst, float(np.max(np.abs(g - w))) / scale)
        ad1, _, _ = discretize(a, b, sigma, 240.0)
        ad2, _, _ = discretize(a, b, sigma, 360.0)
        ad3, _, _ = discretize(a, b, sigma, 600.0)
        worst_semi = max(worst_semi, float(np.max(np.abs(ad1 @ ad2 - ad3))))
    elapsed = time.time() - t0
    assert worst < 1e-6
    assert worst_semi < 1e-10
    assert elapsed < 10.0
    report(2, f"oracle rel {worst:.2e}, semigroup {worst_semi:.2e}, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# Criterion 3: self-consistency recovery on model-generated data
# ---------------------------------------------------------------------------


TRUE_THETA = RcParameters(r_o=4.2e-3, r_i=1.1e-3, c_w=2.5e7, c_i=3.0e6,
                          a_w=3.0, sigma_w=5e-4, sigma_i=1e-3, sigma_eps=0.2)


def test_criterion_03_self_consistency_recovery():
    t0 = time.time()
    n = 15 * 144
    hours = np.arange(n) / 6.0
    hits = 0
    errors = []
    for seed in range(20):
        rng = np.random.default_rng(np.random.SeedSequence(50_000 + seed))
        t_out = (4.0 + 4.0 * np.sin(2 * math.pi * (hours - 9) / 24.0)
                 + np.cumsum(rng.normal(0.0, 0.05, n)))
        i_sol = 250.0 * np.clip(np.sin(math.pi * ((hours % 24) - 8) / 9.0), 0, None)
        t_set = np.where(((hours % 24) >= 6) & ((hours % 24) < 22), 20.0, 17.0)
        ds = generate_rc_dataset(TRUE_THETA, t_out, i_sol, t_set,
                                 datetime(2009, 1, 2), 600, seed=seed)
        est = fit_ml(ds, FitOptions(n_restarts=3, seed=777 + seed))
        if not est.converged:
            continue
        req = infer_req(est)
        rel = abs(req.r_eq - TRUE_THETA.r_eq) / TRUE_THETA.r_eq
        errors.append(rel)
        if rel <= 0.05 and abs(req.r_eq - TRUE_THETA.r_eq) <= 2.0 * req.sigma:
            hits += 1
    elapsed = time.time() - t0
    assert hits >= 18, f"only {hits}/20 replicates recovered R_eq"
    assert elapsed < 180.0
    report(3, f"{hits}/20 within 5% and 2 sigma, median rel err "
              f"{np.median(errors) * 100:.2f}%, {elapsed:.0f}s")


# ---------------------------------------------------------------------------
# Criterion 4: target linearity of the shipped case study
# ---------------------------------------------------------------------------


def test_criterion_04_target_linearity():
    network = build_thermal_network(case_study())
    base = reference_weather()
    wind = float(base.wind_speed.mean())
    rep = compute_target_req(network, TargetConditions(t_out=2.0, wind=wind), days=30)
    assert rep.r_squared >= 0.999
    report(4, f"R2 = {rep.r_squared:.7f}, own target R*_eq = "
              f"{rep.r_eq_star * 1000:.3f} K/kW")


# ---------------------------------------------------------------------------
# Criterion 5: desk-scale repeatability sweep
# ---------------------------------------------------------------------------


def _at_most_one_adjacent_inversion(values, decreasing):
    diffs = np.diff(values)
    bad = diffs > 0 if decreasing else diffs < 0
    return int(np.sum(bad)) <= 1


def test_criterion_05_desk_scale_sweep(desk_sweep):
    target = desk_sweep["target"]["r_eq_star"]

    # (a) total variance of the estimates decreasing with duration, at most
    # one adjacent inversion.  Variance taken over every successful estimate
    # of the bucket (the variability table), the best-sampled view of the
    # sweep's spread.
    variance = {float(r["duration_days"]): float(r["std"]) ** 2
                for r in desk_sweep["variability"]}
    durations = sorted(variance)
    assert durations == [float(d) for d in DURATIONS]
    variance_path = [variance[d] for d in durations]
    assert _at_most_one_adjacent_inversion(variance_path, decreasing=True), variance_path
    assert variance_path[-1] < variance_path[0]

    # (b) >= 90% of the 25-day estimates within +/-10% of the sweep's target.
    ok25 = [r for r in desk_sweep["estimates"]
            if r["duration_days"] == "25" and r["status"] == "ok"]
    assert len(ok25) >= 0.8 * DESK_N * 7
    within = [abs(float(r["r_eq"]) - target) / target <= 0.10 for r in ok25]
    frac_within = float(np.mean(within))
    assert frac_within >= 0.90, f"only {frac_within:.2%} within 10%"

    # (c) interpretability fraction non-decreasing, at most one inversion.
    frac = {float(r["duration_days"]): float(r["fraction_interpretability_ge_05"])
            for r in desk_sweep["variability"]}
    frac_path = [frac[d] for d in sorted(frac)]
    assert _at_most_one_adjacent_inversion(frac_path, decreasing=False), frac_path

    assert desk_sweep["elapsed"] < 1800.0
    report(5, f"variance {variance_path[0]:.2e} -> {variance_path[-1]:.2e}, "
              f"{frac_within:.0%} of 25-day fits within 10%, interpretability "
              f"{frac_path[0]:.2f} -> {frac_path[-1]:.2f}, "
              f"sweep {desk_sweep['elapsed'] / 60:.1f} min")


# ---------------------------------------------------------------------------
# Criterion 6: interpretability analytic score vs quadrature
# ---------------------------------------------------------------------------


def test_criterion_06_interpretability_quadrature():
    t0 = time.time()
    target = 5.3e-3
    worst = 0.0
    for mu_f in np.linspace(0.8, 1.2, 10):
        for sigma_f in np.linspace(0.005, 0.25, 10):
            mu, sigma = mu_f * target, sigma_f * target
            got = interpretability(mu, sigma, target)
            want, _ = quad(lambda x: norm.pdf(x, loc=mu, scale=sigma),
                           0.95 * target, 1.05 * target)
            worst = max(worst, abs(got - want))
    sigma_95 = 0.05 * 5.0 / 1.95996
    band_err = abs(interpretability(5.0, sigma_95, 5.0) - 0.95)
    elapsed = time.time() - t0
    assert worst < 1e-6
    assert band_err < 1e-4
    assert elapsed < 1.0
    report(6, f"grid max err {worst:.2e}, 0.95-band err {band_err:.2e}, "
              f"{elapsed:.2f}s")


# ---------------------------------------------------------------------------
# Criterion 7: Sobol estimator on analytic functions
# ---------------------------------------------------------------------------


def test_criterion_07_sobol_analytic():
    t0 = time.time()
    rng = np.random.default_rng(707)
    n = 1024
    x1a, x2a, x1b, x2b = rng.normal(size=(4, n))
    y_a = x1a + x2a
    s_grp1 = first_order_group_index(y_a, x1a + x2b, seed=1)
    s_grp2 = first_order_group_index(y_a, x1b + x2a, seed=2)
    assert abs(s_grp1["s1"] - 0.5) <= 0.05
    assert abs(s_grp2["s1"] - 0.5) <= 0.05
    assert abs(s_grp1["s1"] + s_grp2["s1"] - 1.0) <= 0.1

    y_single = rng.normal(size=256)
    s_single = first_order_group_index(y_single, y_single.copy(), n_bootstrap=50)
    assert s_single["s1"] == 1.0
    elapsed = time.time() - t0
    assert elapsed < 5.0
    report(7, f"additive s1 = {s_grp1['s1']:.3f}/{s_grp2['s1']:.3f}, "
              f"single-factor s1 = 1 exactly, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# Criterion 8: sensitivity plausibility on the desk-scale sweep
# ---------------------------------------------------------------------------


def test_criterion_08_sensitivity_plausibility(desk_sweep):
    rows = {}
    for r in desk_sweep["sensitivity"]:
        if r["s1"]:
            rows.setdefault(float(r["duration_days"]), {})[r["group"]] = (
                float(r["s1"]), float(r["se"])
            )
    details = []
    for duration in (11.0, 15.0, 25.0):
        cell = rows[duration]
        ranked = sorted(cell, key=lambda g: cell[g][0], reverse=True)
        assert set(ranked[:2]) == {"t_out", "wind_speed"}, (
            f"{duration}: top-2 = {ranked[:2]} with {cell}"
        )
        for group in ("rh", "wind_dir"):
            s1, se = cell[group]
            assert s1 <= 0.1 + 2.0 * se, f"{duration}: {group} s1 = {s1:.2f}"
        details.append(
            f"{duration:.0f}d t_out {cell['t_out'][0]:.2f} / "
            f"wind {cell['wind_speed'][0]:.2f}"
        )
    report(8, "; ".join(details))


# ---------------------------------------------------------------------------
# Criterion 9: ISO convergence checker against hand-computed verdicts
# ---------------------------------------------------------------------------


def _series(values, durations):
    return [ReqEstimate(r_eq=v, sigma=0.0, duration_days=d)
            for v, d in zip(values, durations)]


def test_criterion_09_iso_convergence_table():
    # (values, durations, min_dur, 24h_met, first_pass, two_thirds)
    cases = [
        ([5.0, 5.1], [2, 3], True, True, 3, True),            # 2% pass
        ([5.0, 5.5], [2, 3], True, False, None, False),       # 10% fail
        ([6.0, 5.76, 5.6448], [2, 3, 5], True, True, 3, True),
        ([5.0, 5.26], [1, 2], False, False, None, False),     # 5.2% fail, < 72h
        ([4.0, 4.5, 4.2, 4.16], [2, 3, 5, 8], True, True, 8, True),
        ([5.5, 5.2, 5.05, 5.0, 4.99], [2, 3, 5, 8, 11], True, True, 5, True),
        ([5.0, 5.0], [2, 3], True, True, 3, True),
        ([5.0, 4.7], [3, 4], True, False, None, False),       # -6% fail
        ([10.0, 9.6, 9.5, 9.45, 9.44, 9.43, 9.42],
         [2, 3, 5, 8, 11, 15, 25], True, True, 3, True),
        ([5.0, 5.2, 5.9], [2, 3, 5], True, True, 3, False),   # late drift fails 2/3
    ]
    for values, durations, min_dur, met24, first_pass, two_thirds in cases:
        verdict = iso9869_convergence(_series(values, durations))
        assert verdict.criterion_min_duration_met == min_dur, (values, durations)
        assert verdict.criterion_24h_met == met24, (values, durations)
        assert verdict.first_pass_duration == first_pass, (values, durations)
        assert verdict.criterion_two_thirds_met == two_thirds, (values, durations)
    with pytest.raises(NotAssessableError):
        iso9869_convergence(_series([5.0], [2]))
    report(9, f"{len(cases)} hand-computed sequences reproduced exactly")


# ---------------------------------------------------------------------------
# Criterion 10: end-to-end determinism across runs and worker counts
# ---------------------------------------------------------------------------


def test_criterion_10_end_to_end_determinism(tmp_path):
    save_building(case_study(), tmp_path / "building.json")
    write_weather(reference_weather(), tmp_path / "weather.csv")
    bundles = []
    for out_name, workers in (("run_a", 1), ("run_b", 2)):
        raw = {
            "building_spec": "building.json",
            "base_weather": "weather.csv",
            "output_dir": out_name,
            "n_samples": 4,
            "master_seed": 31,
            "durations": [2, 3],
            "fit": {"n_restarts": 2},
            "target": {"days": 12},
        }
        cfg_path = tmp_path / f"{out_name}.json"
        cfg_path.write_text(json.dumps(raw))
        runner = CliRunner()
        result = runner.invoke(
            cli_main,
            ["all", "--config", str(cfg_path), "--workers", str(workers)],
        )
        assert result.exit_code == 0, result.output
        out_dir = tmp_path / out_name
        bundle = {}
        for name in ("variability.csv", "sensitivity.csv", "convergence.csv",
                     "scatter.csv"):
            bundle[name] = (out_dir / "report" / name).read_bytes()
        bundle["estimates.csv"] = (out_dir / "sweep" / "estimates.csv").read_bytes()
        bundles.append(bundle)
    assert bundles[0] == bundles[1]
    report(10, "report bundles byte-identical across runs and worker counts "
               f"({sum(len(v) for v in bundles[0].values())} bytes compared)")
