"""From calibrated models to R_eq: uncertainty, interpretability, diagnostics.

R_eq is the sum of the two fitted resistances; its standard deviation uses
the perfectly-correlated combination of the marginal deviations (a
covariance-based alternative is available behind a flag).  The
interpretability score is the Gaussian probability mass within +/-5 % of a
target resistance.  Residual-whiteness and ISO-9869-style convergence
checks support model selection and stopping decisions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    NonConvergedError,
    NotAssessableError,
    UndefinedAcfError,
    ValidationError,
)
from .greybox import PARAM_NAMES, Estimate

_IDX_RO = PARAM_NAMES.index("r_o")
_IDX_RI = PARAM_NAMES.index("r_i")


@dataclass
class ReqEstimate:
    """Equivalent resistance with one-sigma uncertainty."""

    r_eq: float
    sigma: float
    duration_days: float | None = None
    weather_sample_id: str | None = None
    source: Estimate | None = None

    def __post_init__(self):
        if self.r_eq <= 0:
            raise ValidationError(f"r_eq must be > 0, got {self.r_eq}")
        if self.sigma < 0:
            raise ValidationError(f"sigma must be >= 0, got {self.sigma}")

    def to_dict(self) -> dict:
        return {
            "r_eq": self.r_eq,
            "sigma": self.sigma,
            "duration_days": self.duration_days,
            "weather_sample_id": self.weather_sample_id,
        }


def infer_req(est: Estimate, use_correlation: bool = False) -> ReqEstimate:
    """Derive R_eq = R_o + R_i and its standard deviation from a fit.

    Marginal deviations come from the log-space covariance by the delta
    method.  The default combination assumes perfectly correlated errors,
    sigma = sqrt(s_o^2 + s_i^2 + 2 s_o s_i); with ``use_correlation`` the
    fitted cross-covariance replaces the product term.

    Raises:
        NonConvergedError: the estimate did not converge.
    """
    if not est.converged:
        raise NonConvergedError("refusing to derive R_eq from a non-converged fit")
    r_o = est.theta_ml.r_o
    r_i = est.theta_ml.r_i
    var_lo = est.covariance[_IDX_RO, _IDX_RO]
    var_li = est.covariance[_IDX_RI, _IDX_RI]
    s_o = r_o * math.sqrt(max(0.0, var_lo)) if np.isfinite(var_lo) else math.inf
    s_i = r_i * math.sqrt(max(0.0, var_li)) if np.isfinite(var_li) else math.inf
    if use_correlation:
        cov_ln = est.covariance[_IDX_RO, _IDX_RI]
        cov_nat = r_o * r_i * cov_ln if np.isfinite(cov_ln) else math.inf
        var = s_o**2 + s_i**2 + 2.0 * cov_nat
        sigma = math.sqrt(max(0.0, var)) if np.isfinite(var) else math.inf
    else:
        sigma = math.sqrt(s_o**2 + s_i**2 + 2.0 * s_o * s_i) if (
            np.isfinite(s_o) and np.isfinite(s_i)
        ) else math.inf
    return ReqEstimate(r_eq=r_o + r_i, sigma=sigma, source=est)


def interpretability(r_eq: float, sigma: float, target: float) -> float:
    """Probability mass of N(r_eq, sigma^2) inside +/-5 % of the target.

    With sigma = 0 the score degenerates to the indicator of r_eq lying in
    the band.  Scores above 0.5 are conventionally read as satisfactory.
    """
    if sigma < 0:
        raise ValidationError(f"sigma must be >= 0, got {sigma}")
    if target <= 0:
        raise ValidationError(f"target must be > 0, got {target}")
    lo = 0.95 * target
    hi = 1.05 * target
    if sigma == 0 or not np.isfinite(sigma):
        if not np.isfinite(sigma):
            return 0.0
        return 1.0 if lo <= r_eq <= hi else 0.0
    z_hi = (hi - r_eq) / sigma
    z_lo = (lo - r_eq) / sigma
    return 0.5 * (math.erf(z_hi / math.sqrt(2.0)) - math.erf(z_lo / math.sqrt(2.0)))


def residual_autocorrelation(residuals: np.ndarray, max_lag: int):
    """Sample ACF up to ``max_lag`` plus a whiteness verdict.

    The verdict is white when at most 7 % of lags exceed the +/-1.96/sqrt(N)
    band (5 % nominal plus estimator slack).  ACF index 0 is included and is
    exactly 1.

    Raises:
        UndefinedAcfError: residuals have zero variance.
        ValidationError: series shorter than 3 * max_lag.
    """
    r = np.asarray(residuals, dtype=float)
    n = r.size
    if max_lag < 1:
        raise ValidationError("max_lag must be >= 1")
    if n < 3 * max_lag:
        raise ValidationError(
            f"need at least 3*max_lag = {3 * max_lag} points, got {n}"
        )
    centred = r - r.mean()
    denom = float(centred @ centred)
    if denom == 0.0:
        raise UndefinedAcfError("constant residuals: autocorrelation undefined")
    acf = np.empty(max_lag + 1)
    acf[0] = 1.0
    for lag in range(1, max_lag + 1):
        acf[lag] = float(centred[lag:] @ centred[:-lag]) / denom
    band = 1.96 / math.sqrt(n)
    exceed = int(np.sum(np.abs(acf[1:]) > band))
    white = exceed <= 0.07 * max_lag
    return {
        "acf": acf,
        "band": band,
        "n_exceeding": exceed,
        "white": bool(white),
    }


@dataclass
class ConvergenceVerdict:
    """ISO-9869-style stopping assessment over duration-graded estimates."""

    pairwise_deviations: list[float]        # percent, per consecutive pair
    criterion_min_duration_met: bool        # longest duration >= 72 h
    criterion_24h_met: bool                 # some consecutive deviation <= threshold
    criterion_two_thirds_met: bool
    first_pass_duration: float | None

    def to_dict(self) -> dict:
        return {
            "pairwise_deviations_pct": self.pairwise_deviations,
            "criterion_min_duration_met": self.criterion_min_duration_met,
            "criterion_24h_met": self.criterion_24h_met,
            "criterion_two_thirds_met": self.criterion_two_thirds_met,
            "first_pass_duration": self.first_pass_duration,
        }


def iso9869_convergence(
    series: list[ReqEstimate], threshold_pct: float = 5.0
) -> ConvergenceVerdict:
    """Adapt the standard's three stopping criteria to duration-graded estimates.

    Deviations are delta_i = (R_i - R_{i-1}) / R_{i-1} * 100 over consecutive
    durations.  The 24 h criterion analogue passes at the first duration
    whose deviation stays within the threshold.  The two-thirds criterion is
    realised on nested subsets: the estimate at the smallest duration
    covering ceil(2N/3) days is compared with the full-duration estimate.

    Raises:
        NotAssessableError: fewer than two estimates.
        ValidationError: durations not strictly increasing.
    """
    if len(series) < 2:
        raise NotAssessableError("convergence needs at least two estimates")
    durations = [e.duration_days for e in series]
    if any(d is None for d in durations):
        raise ValidationError("every estimate needs duration_days")
    if any(b <= a for a, b in zip(durations, durations[1:])):
        raise ValidationError("durations must be strictly increasing")

    values = [e.r_eq for e in series]
    deviations = [
        (b - a) / a * 100.0 for a, b in zip(values, values[1:])
    ]
    first_pass = None
    for dev, dur in zip(deviations, durations[1:]):
        if abs(dev) <= threshold_pct:
            first_pass = dur
            break

    n_total = durations[-1]
    two_thirds = math.ceil(2.0 * n_total / 3.0)
    idx = next((i for i, d in enumerate(durations) if d >= two_thirds), None)
    if idx is None or idx == len(durations) - 1:
        # No strictly shorter nested subset covers 2N/3: compare last two.
        idx = len(durations) - 2
    ref = values[idx]
    dev_23 = abs(values[-1] - ref) / ref * 100.0

    return ConvergenceVerdict(
        pairwise_deviations=deviations,
        criterion_min_duration_met=bool(n_total >= 3.0),
        criterion_24h_met=first_pass is not None,
        criterion_two_thirds_met=bool(dev_23 <= threshold_pct),
        first_pass_duration=first_pass,
    )
