"""Grouped variance-based sensitivity analysis and duration-sweep summaries.

First-order indices per weather group come from the centred pick-freeze
estimator applied to the paired outputs of blocks A and C_i of a sample
plan; bootstrap resampling over paired rows provides standard errors.
Fits that failed are excluded pairwise so block alignment survives.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, UndefinedIndexError, ValidationError
from .inference import ReqEstimate, interpretability
from .weather import SamplePlan

BOOTSTRAP_RESAMPLES = 500

#: Indices below this floor are reported as insignificant order-of-magnitude.
SIGNIFICANCE_FLOOR = 0.1


def first_order_group_index(
    y_a: np.ndarray,
    y_c: np.ndarray,
    n_bootstrap: int = BOOTSTRAP_RESAMPLES,
    seed: int = 0,
) -> dict:
    """Centred pick-freeze first-order index of one group.

    s1 = [mean(y_a * y_c) - m^2] / [mean((y_a^2 + y_c^2)/2) - m^2] with the
    pooled mean m over both blocks; the estimator is symmetric in the pair
    and exactly 1 when the blocks coincide row-wise.  ``se`` comes from a
    bootstrap over paired rows.

    Raises:
        UndefinedIndexError: pooled output variance is zero.
        ValidationError: length mismatch, non-finite values, or n < 8.
    """
    y_a = np.asarray(y_a, dtype=float)
    y_c = np.asarray(y_c, dtype=float)
    if y_a.shape != y_c.shape or y_a.ndim != 1:
        raise ValidationError("paired blocks must be equal-length vectors")
    n = y_a.size
    if n < 8:
        raise ValidationError(f"need at least 8 paired rows, got {n}")
    if not (np.all(np.isfinite(y_a)) and np.all(np.isfinite(y_c))):
        raise ValidationError("pick-freeze outputs must be finite")

    s1 = _pick_freeze(y_a, y_c)

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    boot = np.empty(n_bootstrap)
    for b in range(n_bootstrap):
        idx = rng.integers(0, n, n)
        try:
            boot[b] = _pick_freeze(y_a[idx], y_c[idx])
        except UndefinedIndexError:
            boot[b] = np.nan
    se = float(np.nanstd(boot))
    return {"s1": s1, "se": se}


def _pick_freeze(y_a: np.ndarray, y_c: np.ndarray) -> float:
    m = float(np.mean((y_a + y_c) / 2.0))
    num = float(np.mean(y_a * y_c)) - m * m
    den = float(np.mean((y_a**2 + y_c**2) / 2.0)) - m * m
    if den <= 0.0:
        raise UndefinedIndexError("zero output variance: index undefined")
    return num / den


@dataclass
class GroupIndex:
    group: str
    s1: float
    se: float
    partial_variance: float
    n_effective: int

    @property
    def significant(self) -> bool:
        """Order-of-magnitude reading: indices under the floor are noise."""
        return abs(self.s1) >= SIGNIFICANCE_FLOOR


@dataclass
class SensitivityReport:
    duration_days: float
    total_variance: float
    n: int
    indices: list[GroupIndex] = field(default_factory=list)
    unreliable: bool = False
    unattributed_fraction: float = float("nan")

    def index_for(self, group: str) -> GroupIndex:
        for gi in self.indices:
            if gi.group == group:
                return gi
        raise KeyError(group)


def run_sensitivity(
    outputs: dict[str, float | None],
    plan: SamplePlan,
    duration_days: float,
    seed: int = 0,
) -> SensitivityReport:
    """Grouped first-order indices of one duration's outputs over the plan.

    ``outputs`` maps plan row ids to R_eq values (None/NaN for failed fits).
    A failed A-row removes its pair from every group; a failed C_i row only
    removes that group's pair.  Total variance is taken over surviving
    A-rows; the report is flagged unreliable when more than 20 % of rows of
    any block failed.

    Raises:
        UndefinedIndexError: all outputs identical (zero variance).
    """
    n = plan.n
    groups = plan.groups

    def value(row_id: str) -> float:
        v = outputs.get(row_id)
        if v is None:
            return np.nan
        return float(v)

    a_vals = np.array([value(f"A_{r:04d}") for r in range(n)])
    a_ok = np.isfinite(a_vals)

    failed_fraction = float(np.sum(~a_ok)) / n
    indices = []
    for g, vid in enumerate(groups):
        c_vals = np.array([value(f"C{g + 1}_{r:04d}") for r in range(n)])
        ok = a_ok & np.isfinite(c_vals)
        failed_fraction = max(failed_fraction, float(np.sum(~ok)) / n)
        if np.sum(ok) < 8:
            raise InsufficientDataError(
                f"group {vid}: only {int(np.sum(ok))} valid pairs"
            )
        res = first_order_group_index(a_vals[ok], c_vals[ok], seed=seed + g)
        indices.append(
            GroupIndex(
                group=vid,
                s1=res["s1"],
                se=res["se"],
                partial_variance=np.nan,  # filled once total variance is known
                n_effective=int(np.sum(ok)),
            )
        )

    valid_a = a_vals[a_ok]
    total_var = float(np.var(valid_a))
    if total_var == 0.0:
        raise UndefinedIndexError(
            f"duration {duration_days}: all outputs equal, variance undefined"
        )
    for gi in indices:
        gi.partial_variance = gi.s1 * total_var

    s1_sum = sum(gi.s1 for gi in indices)
    return SensitivityReport(
        duration_days=duration_days,
        total_variance=total_var,
        n=n,
        indices=indices,
        unreliable=failed_fraction > 0.20,
        unattributed_fraction=1.0 - s1_sum,
    )


@dataclass
class VariabilitySummary:
    duration_days: float
    median: float
    std: float
    q05: float
    q95: float
    fraction_within_10pct_of_median: float
    fraction_interpretability_ge_05: float
    n: int


def summarize_variability(
    estimates: dict[float, list[ReqEstimate]], target: float
) -> list[VariabilitySummary]:
    """Spread and interpretability statistics per duration bucket.

    Buckets with fewer than 8 estimates are skipped.  Returned rows are
    ordered by duration.
    """
    rows = []
    for duration in sorted(estimates):
        bucket = estimates[duration]
        if len(bucket) < 8:
            continue
        values = np.array([e.r_eq for e in bucket])
        med = float(np.median(values))
        within = np.abs(values - med) <= 0.10 * med
        scores = np.array(
            [interpretability(e.r_eq, e.sigma, target) for e in bucket]
        )
        rows.append(
            VariabilitySummary(
                duration_days=duration,
                median=med,
                std=float(np.std(values)),
                q05=float(np.quantile(values, 0.05)),
                q95=float(np.quantile(values, 0.95)),
                fraction_within_10pct_of_median=float(np.mean(within)),
                fraction_interpretability_ge_05=float(np.mean(scores >= 0.5)),
                n=len(bucket),
            )
        )
    return rows
