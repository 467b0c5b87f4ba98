"""Toolkit for assessing weather-variability effects on envelope R_eq estimation.

The package covers the full synthetic experiment: stochastic weather
generation around a typical-year base, a high-order thermal-network
reference simulator, stochastic RC grey-box calibration by Kalman-filter
maximum likelihood, R_eq inference with uncertainty and interpretability
scoring, grouped Sobol sensitivity analysis, and a reproducible pipeline.
"""

from .errors import EnvsensError
from .weather import (
    GENEVA,
    PHYSICAL_BOUNDS,
    VARIABLE_IDS,
    SamplePlan,
    Site,
    VariableModel,
    WeatherSeries,
    build_sample_plan,
    fit_all_models,
    fit_variable_model,
    global_horizontal,
    load_weather,
    sample_weather,
    write_weather,
)
from .building import (
    BuildingSpec,
    Heater,
    Layer,
    SetpointSchedule,
    Ventilation,
    WallAssembly,
    Window,
    Zone,
    load_building,
    save_building,
    setpoint,
)
from .network import NetworkModel, build_thermal_network
from .simulate import (
    RunWindow,
    SimDataset,
    TargetConditions,
    TargetReport,
    add_measurement_noise,
    compute_target_req,
    extract_subset,
    read_dataset,
    simulate,
    ventilation_flow,
    write_dataset,
)
from .greybox import (
    Estimate,
    FitOptions,
    RcParameters,
    continuous_matrices,
    discretize,
    estimate_covariance,
    fit_first_order,
    fit_ml,
    generate_rc_dataset,
    kalman_loglik,
)
from .inference import (
    ConvergenceVerdict,
    ReqEstimate,
    infer_req,
    interpretability,
    iso9869_convergence,
    residual_autocorrelation,
)
from .sensan import (
    SensitivityReport,
    VariabilitySummary,
    first_order_group_index,
    run_sensitivity,
    summarize_variability,
)
from .datasets import case_study, reference_weather
from .pipeline import ExperimentConfig, load_config, run_all

__version__ = "0.1.0"
