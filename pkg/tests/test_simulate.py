from datetime import datetime, timedelta

import numpy as np
import pytest

from envsens.building import (
    BuildingSpec,
    CONSTANT_SCHEDULE,
    Heater,
    Layer,
    SetpointSchedule,
    Ventilation,
    WallAssembly,
    Window,
    Zone,
)
from envsens.datasets import case_study
from envsens.errors import CoverageError, InsufficientDataError, StateError
from envsens.network import build_thermal_network
from envsens.simulate import (
    NOISE_STD_POWER,
    NOISE_STD_SOLAR,
    NOISE_STD_TEMPERATURE,
    RunWindow,
    SimDataset,
    TargetConditions,
    add_measurement_noise,
    compute_target_req,
    extract_subset,
    read_dataset,
    simulate,
    write_dataset,
)
from envsens.weather import WeatherSeries


def constant_weather(t_out=0.0, wind=0.0, days=60, start=datetime(2008, 12, 1)):
    n = days * 24
    return WeatherSeries(
        start=start, step_s=3600,
        t_out=np.full(n, t_out), rh=np.full(n, 70.0),
        i_dn=np.zeros(n), i_dh=np.zeros(n),
        wind_speed=np.full(n, wind), wind_dir=np.full(n, 180.0),
    )


def box_spec(max_power=2000.0, gain=800.0, vent_flow=0.0):
    return BuildingSpec(
        zones=[Zone(id="room", air_capacitance=5e5, volume=50.0)],
        wall_assemblies=[
            WallAssembly(
                name="wall", from_node="room", to_node="outdoor", area=20.0,
                layers=(Layer(0.1, 0.04, 50.0, 1000.0),), sub_nodes=3,
            )
        ],
        windows=[],
        ventilation=Ventilation(zone="room", design_flow=vent_flow),
        heater=Heater(zone="room", max_power=max_power, proportional_gain=gain),
        ground_temperature=10.0,
    )


@pytest.fixture(scope="module")
def steady_run():
    start = datetime(2008, 12, 20)
    return RunWindow(start=start, end=start + timedelta(days=4), step_s=600)


# ---------------------------------------------------------------------------
# Steady-state behaviour
# ---------------------------------------------------------------------------


def test_steady_state_droop_and_flat_power(steady_run):
    net = build_thermal_network(box_spec())
    weather = constant_weather(t_out=0.0)
    ds = simulate(net, weather, steady_run, schedule=CONSTANT_SCHEDULE)
    # Proportional control: T_in = set - P/gain at equilibrium.
    p_last = ds.p_h[-144:]
    t_last = ds.t_in[-144:]
    assert np.max(np.abs(np.diff(p_last))) / np.mean(p_last) < 1e-6
    droop = np.mean(p_last) / 800.0
    assert np.mean(t_last) == pytest.approx(20.0 - droop, abs=1e-6)


def test_zero_heating_relaxes_to_boundary(steady_run):
    net = build_thermal_network(box_spec(max_power=0.0))
    weather = constant_weather(t_out=5.0)
    ds = simulate(net, weather, steady_run, schedule=CONSTANT_SCHEDULE)
    assert np.all(ds.p_h == 0.0)
    # No ground path in this box: T_in converges to T_out.
    assert abs(ds.t_in[-1] - 5.0) < 1e-6


def test_energy_balance_at_steady_state(steady_run):
    """P_h equals the algebraic steady-state heat loss to within 1e-4."""
    net = build_thermal_network(box_spec(vent_flow=0.02))
    weather = constant_weather(t_out=0.0, wind=1.5)
    ds = simulate(net, weather, steady_run, schedule=CONSTANT_SCHEDULE)
    p_sim = float(ds.p_h[-144:].mean())
    t_in = float(ds.t_in[-144:].mean())
    # Independent steady solve: K x = boundary forcing + heater injection.
    from envsens.building import AIR_DENSITY, AIR_SPECIFIC_HEAT

    g_vent = AIR_DENSITY * AIR_SPECIFIC_HEAT * 0.02 * (
        0.606 + 0.03636 * abs(t_in - 0.0) + 0.1177 * 1.5
    )
    htc = net.steady_state_htc(extra_zone_outdoor=g_vent)
    p_expected = htc * (t_in - 0.0)
    assert abs(p_sim - p_expected) / p_sim < 1e-4


def test_setpoint_step_time_constant():
    """Scheduled 17 -> 20 step: monotone rise, time constant in the modal range."""
    spec = box_spec(max_power=5000.0)
    net = build_thermal_network(spec)
    weather = constant_weather(t_out=0.0, days=80)
    # Fine-grained run over a Monday: the weekly schedule steps at 06:00.
    monday = datetime(2009, 1, 5)
    run = RunWindow(start=monday, end=monday + timedelta(days=1), step_s=60)
    ds = simulate(net, weather, run)

    i0 = 6 * 60   # 06:00
    i1 = 9 * 60   # end of the morning comfort window
    rise = ds.t_in[i0:i1] - ds.t_in[i0]
    final = rise[-1]
    assert final > 2.0  # meaningful step response
    assert np.all(np.diff(rise) > -1e-9)  # monotone

    # Eigen-analysis oracle: closed-loop modal time constants
    # (heater gain acts on the zone node; controller stays unclamped here).
    k = net.conductance.copy()
    z = net.zone_index["room"]
    k[z, z] += spec.heater.proportional_gain
    m = np.linalg.solve(np.diag(net.capacitance), k)
    taus = np.sort(1.0 / np.linalg.eigvals(m).real)
    k63 = int(np.argmax(rise >= 0.63 * final))
    tau_observed = k63 * 60.0
    assert taus.min() * 0.5 <= tau_observed <= taus.max() * 2.0


def test_simulation_deterministic(case_network, base_weather, winter_run):
    d1 = simulate(case_network, base_weather, winter_run)
    d2 = simulate(case_network, base_weather, winter_run)
    np.testing.assert_array_equal(d1.t_in, d2.t_in)
    np.testing.assert_array_equal(d1.p_h, d2.p_h)


def test_colder_outdoor_increases_power(steady_run):
    net = build_thermal_network(box_spec())
    p = {}
    for t_out in (0.0, -5.0):
        ds = simulate(net, constant_weather(t_out=t_out), steady_run,
                      schedule=CONSTANT_SCHEDULE)
        p[t_out] = ds.p_h[-144:].mean()
    assert p[-5.0] > p[0.0]


def test_warmup_excluded_and_coverage_checked(case_network, base_weather):
    run = RunWindow(start=datetime(2008, 11, 15), end=datetime(2008, 12, 15))
    ds = simulate(case_network, base_weather, run)
    assert ds.start == run.start
    assert len(ds) == 30 * 144
    bad = RunWindow(start=datetime(2008, 10, 26), end=datetime(2008, 11, 15))
    with pytest.raises(CoverageError):
        simulate(case_network, base_weather, bad)


def test_paper_window_output_shape(clean_dataset):
    # Nov 15 - Feb 15 at 600 s: 92 days of output.
    assert len(clean_dataset) == 92 * 144
    assert np.all(clean_dataset.p_h >= 0.0)
    assert np.all(clean_dataset.p_h <= case_study().heater.max_power)


# ---------------------------------------------------------------------------
# Measurement noise
# ---------------------------------------------------------------------------


def test_noise_levels_and_determinism(clean_dataset):
    noisy1 = add_measurement_noise(clean_dataset, seed=42)
    noisy2 = add_measurement_noise(clean_dataset, seed=42)
    np.testing.assert_array_equal(noisy1.t_in, noisy2.t_in)
    n = len(clean_dataset)
    assert n > 10_000
    assert abs(np.std(noisy1.t_in - clean_dataset.t_in) - NOISE_STD_TEMPERATURE) < 0.01
    assert abs(np.std(noisy1.t_out - clean_dataset.t_out) - NOISE_STD_TEMPERATURE) < 0.01
    assert abs(np.std(noisy1.p_h - clean_dataset.p_h) - NOISE_STD_POWER) < 1.0
    assert abs(np.std(noisy1.i_sol - clean_dataset.i_sol) - NOISE_STD_SOLAR) < 0.25


def test_noise_channels_independent(clean_dataset):
    noisy = add_measurement_noise(clean_dataset, seed=7)
    eps = {
        "t_in": noisy.t_in - clean_dataset.t_in,
        "t_out": noisy.t_out - clean_dataset.t_out,
        "i_sol": noisy.i_sol - clean_dataset.i_sol,
        "p_h": noisy.p_h - clean_dataset.p_h,
    }
    names = list(eps)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            corr = np.corrcoef(eps[a], eps[b])[0, 1]
            assert abs(corr) <= 0.05


def test_double_noising_rejected(noisy_dataset):
    with pytest.raises(StateError):
        add_measurement_noise(noisy_dataset, seed=1)


# ---------------------------------------------------------------------------
# Target computation
# ---------------------------------------------------------------------------


def pure_resistance_spec():
    # Vanishing thermal mass: the network reaches steady state immediately.
    return BuildingSpec(
        zones=[Zone(id="room", air_capacitance=1e-3, volume=50.0)],
        wall_assemblies=[
            WallAssembly(
                name="wall", from_node="room", to_node="outdoor", area=10.0,
                layers=(Layer(0.05, 0.04, 1e-6, 1e-3),), sub_nodes=2,
            )
        ],
        windows=[Window(zone="room", orientation="S", area=2.0, u_value=1.5,
                        solar_aperture=0.0)],
        ventilation=Ventilation(zone="room", design_flow=0.0),
        heater=Heater(zone="room", max_power=3000.0, proportional_gain=500.0),
    )


def test_target_pure_resistance_matches_analytic():
    net = build_thermal_network(pure_resistance_spec())
    report = compute_target_req(net, TargetConditions(t_out=0.0, wind=0.0), days=12)
    # Analytic: wall 10 m2 of R = 0.05/0.04 = 1.25 m2K/W plus window 3 W/K.
    htc_expected = 10.0 * 0.04 / 0.05 + 2.0 * 1.5
    assert report.r_squared > 1.0 - 1e-9
    assert report.htc == pytest.approx(htc_expected, rel=1e-6)
    assert report.r_eq_star == pytest.approx(1.0 / htc_expected, rel=1e-6)


def test_target_doubling_areas_increases_htc():
    spec = pure_resistance_spec()
    net1 = build_thermal_network(spec)
    doubled = BuildingSpec(
        zones=spec.zones,
        wall_assemblies=[
            WallAssembly(name=w.name, from_node=w.from_node, to_node=w.to_node,
                         area=2.0 * w.area, layers=w.layers, sub_nodes=w.sub_nodes)
            for w in spec.wall_assemblies
        ],
        windows=spec.windows,
        ventilation=spec.ventilation,
        heater=spec.heater,
    )
    net2 = build_thermal_network(doubled)
    r1 = compute_target_req(net1, TargetConditions(t_out=0.0, wind=0.0), days=12)
    r2 = compute_target_req(net2, TargetConditions(t_out=0.0, wind=0.0), days=12)
    assert r2.htc > r1.htc
    # Oracle: recomputed conductance sum (walls double, window unchanged).
    assert r2.htc == pytest.approx(2.0 * 10.0 * 0.04 / 0.05 + 3.0, rel=1e-6)


def test_target_requires_ten_days(case_network):
    with pytest.raises(InsufficientDataError):
        compute_target_req(case_network, TargetConditions(), days=9)


def test_case_study_target_linearity(case_network, base_weather):
    wind = float(base_weather.wind_speed.mean())
    report = compute_target_req(case_network, TargetConditions(t_out=2.0, wind=wind),
                                days=30)
    assert report.r_squared >= 0.999
    assert 3e-3 < report.r_eq_star < 8e-3  # plausible single-family envelope


# ---------------------------------------------------------------------------
# Subsets and dataset IO
# ---------------------------------------------------------------------------


def test_extract_subset_row_counts(clean_dataset):
    start = datetime(2009, 1, 2)
    sub = extract_subset(clean_dataset, start, 2)
    assert len(sub) == 288
    for d in (2, 3, 5, 8, 11, 15, 25):
        assert len(extract_subset(clean_dataset, start, d)) == d * 144


def test_extract_subset_out_of_range(clean_dataset):
    with pytest.raises(CoverageError):
        extract_subset(clean_dataset, datetime(2008, 11, 1), 2)
    with pytest.raises(CoverageError):
        extract_subset(clean_dataset, datetime(2009, 2, 10), 25)


def test_subset_metadata(noisy_dataset):
    sub = extract_subset(noisy_dataset, datetime(2009, 1, 2), 3)
    assert sub.noisy
    assert sub.meta["subset"]["duration_days"] == 3
    assert sub.meta["subset"]["parent_seed"] == noisy_dataset.seed


def test_dataset_io_roundtrip(tmp_path, noisy_dataset):
    sub = extract_subset(noisy_dataset, datetime(2009, 1, 2), 2)
    path = tmp_path / "subset.csv"
    write_dataset(sub, path)
    back = read_dataset(path)
    np.testing.assert_array_equal(back.t_in, sub.t_in)
    np.testing.assert_array_equal(back.p_h, sub.p_h)
    assert back.noisy == sub.noisy
    assert back.seed == sub.seed
    assert back.start == sub.start
