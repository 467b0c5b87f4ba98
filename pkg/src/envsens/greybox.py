"""Stochastic RC models and Kalman-filter maximum-likelihood calibration.

The workhorse is the second-order network with states (T_w, T_in),
resistances (R_o, R_i), capacitances (C_w, C_i) and solar aperture A_w,
driven by [T_out, I_sol, P_h] and observed through the indoor temperature.
Calibration maximises the innovations likelihood over log-transformed
parameters with BFGS and central finite-difference gradients, multi-started
from log-uniform draws.

Note on the drive matrix: the physically consistent wall-node diagonal is
-(1/R_o + 1/R_i)/C_w (row-sum consistency with the off-diagonal coupling);
a ``printed_form`` toggle reproduces the reduced variant with only
-1/(C_w R_o) for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize

from . import _kalman
from .errors import (
    FitFailureError,
    InsufficientDataError,
    NumericalError,
    ValidationError,
)
from .simulate import SimDataset

PARAM_NAMES = ("r_o", "r_i", "c_w", "c_i", "a_w", "sigma_w", "sigma_i", "sigma_eps")

# Log-uniform restart draw bounds (natural units). Resistances in K/W,
# capacitances in J/K, aperture in m2, noise scales in K/sqrt(s) resp. K.
DEFAULT_BOUNDS = {
    "r_o": (1e-4, 1.0),
    "r_i": (1e-4, 1.0),
    "c_w": (1e5, 1e9),
    "c_i": (1e5, 1e9),
    "a_w": (1e-1, 50.0),
    "sigma_w": (1e-6, 1.0),
    "sigma_i": (1e-6, 1.0),
    "sigma_eps": (1e-6, 1.0),
}


@dataclass
class RcParameters:
    """Parameter vector of the 2R2C stochastic model."""

    r_o: float
    r_i: float
    c_w: float
    c_i: float
    a_w: float
    sigma_w: float
    sigma_i: float
    sigma_eps: float
    x0: tuple[float, float] = (17.0, 17.0)
    p0: float = 1.0

    def __post_init__(self):
        for name in ("r_o", "r_i", "c_w", "c_i", "sigma_eps", "p0"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("a_w", "sigma_w", "sigma_i"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0, got {getattr(self, name)}")

    def to_vector(self) -> np.ndarray:
        return np.array([getattr(self, p) for p in PARAM_NAMES])

    @classmethod
    def from_vector(cls, vec, x0=(17.0, 17.0), p0=1.0) -> "RcParameters":
        return cls(**dict(zip(PARAM_NAMES, map(float, vec))), x0=tuple(x0), p0=p0)

    @property
    def r_eq(self) -> float:
        return self.r_o + self.r_i


def continuous_matrices(theta: RcParameters, printed_form: bool = False):
    """Continuous-time (A, B, Sigma) of the 2R2C model for inputs [T_out, I_sol, P_h]."""
    a11 = -1.0 / (theta.c_w * theta.r_o)
    if not printed_form:
        a11 -= 1.0 / (theta.c_w * theta.r_i)
    a = np.array(
        [
            [a11, 1.0 / (theta.c_w * theta.r_i)],
            [1.0 / (theta.c_i * theta.r_i), -1.0 / (theta.c_i * theta.r_i)],
        ]
    )
    b = np.array(
        [
            [1.0 / (theta.c_w * theta.r_o), theta.a_w / theta.c_w, 0.0],
            [0.0, 0.0, 1.0 / theta.c_i],
        ]
    )
    sigma = np.diag([theta.sigma_w**2, theta.sigma_i**2])
    return a, b, sigma


def discretize(a: np.ndarray, b: np.ndarray, sigma: np.ndarray, dt: float):
    """Exact zero-order-hold discretisation (A_d, B_d, Q_d).

    A_d = exp(A dt); B_d integrates the input response over one step; Q_d is
    the integrated process-noise covariance, computed with the
    augmented-matrix-exponential construction.  For stiff systems the plain
    construction mixes huge and tiny exponential scales, so the integrals
    are evaluated at a halved sub-step and doubled back up through the exact
    semigroup identities, which keeps everything well conditioned.

    Raises:
        NumericalError: non-finite entries in any result.
    """
    if dt <= 0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    n = a.shape[0]

    norm_scale = float(np.linalg.norm(a, np.inf)) * dt
    doublings = max(0, math.ceil(math.log2(max(norm_scale, 1e-12) / 0.5)))
    dt0 = dt / (1 << doublings)

    # Input-response integral S = int exp(A s) ds via exp([[A, I], [0, 0]]).
    aug = np.zeros((2 * n, 2 * n))
    aug[:n, :n] = a
    aug[:n, n:] = np.eye(n)
    phil = expm(aug * dt0)
    a_d = phil[:n, :n]
    s_int = phil[:n, n:]

    # Van Loan construction for the noise integral at the sub-step.
    vl = np.zeros((2 * n, 2 * n))
    vl[:n, :n] = -a
    vl[:n, n:] = sigma
    vl[n:, n:] = a.T
    g = expm(vl * dt0)
    q_d = a_d @ g[:n, n:]
    q_d = 0.5 * (q_d + q_d.T)

    # Semigroup doubling: S_{2t} = (I + A_t) S_t, Q_{2t} = A_t Q_t A_t' + Q_t.
    for _ in range(doublings):
        q_d = a_d @ q_d @ a_d.T + q_d
        q_d = 0.5 * (q_d + q_d.T)
        s_int = s_int + a_d @ s_int
        a_d = a_d @ a_d

    b_d = s_int @ b
    for mat in (a_d, b_d, q_d):
        if not np.all(np.isfinite(mat)):
            raise NumericalError("discretisation produced non-finite entries")
    return a_d, b_d, q_d


def _discretize_rc(a, b, sigma, dt):
    """Closed-form ZOH discretisation for 2x2 drift with real distinct eigenvalues.

    RC networks always land here (their eigenvalues are real and negative);
    falls back to the matrix-exponential route otherwise.  Orders of
    magnitude faster than expm, which matters inside the likelihood loop.
    """
    tr = a[0, 0] + a[1, 1]
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    disc = tr * tr - 4.0 * det
    if disc <= 0.0 or det == 0.0 or a[0, 1] == 0.0:
        return discretize(a, b, sigma, dt)
    root = math.sqrt(disc)
    if root < 1e-3 * abs(tr):
        # Near-defective: the eigenbasis is ill-conditioned, expm is safer.
        return discretize(a, b, sigma, dt)
    l1 = 0.5 * (tr + root)
    l2 = 0.5 * (tr - root)
    if l1 + l2 == 0.0 or l1 == 0.0 or l2 == 0.0:
        return discretize(a, b, sigma, dt)
    v = np.array([[a[0, 1], a[0, 1]], [l1 - a[0, 0], l2 - a[0, 0]]])
    det_v = v[0, 0] * v[1, 1] - v[0, 1] * v[1, 0]
    if det_v == 0.0:
        return discretize(a, b, sigma, dt)
    v_inv = np.array([[v[1, 1], -v[0, 1]], [-v[1, 0], v[0, 0]]]) / det_v

    e1 = math.exp(l1 * dt)
    e2 = math.exp(l2 * dt)
    a_d = v @ np.diag([e1, e2]) @ v_inv
    # B_d = A^-1 (A_d - I) B
    a_inv = np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]]) / det
    b_d = a_inv @ (a_d - np.eye(2)) @ b
    # Q_d in the eigenbasis: entries (e^{(li+lj)dt} - 1)/(li+lj).
    w = v_inv @ sigma @ v_inv.T
    lam = (l1, l2)
    core = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            s = lam[i] + lam[j]
            core[i, j] = w[i, j] * (math.exp(s * dt) - 1.0) / s
    q_d = v @ core @ v.T
    q_d = 0.5 * (q_d + q_d.T)
    return a_d, b_d, q_d


def kalman_loglik(theta: RcParameters, ds: SimDataset, printed_form: bool = False):
    """Innovations log-likelihood of the 2R2C model on a dataset.

    Returns ``(loglik, residuals, variances)`` where residuals are the
    one-step prediction errors and variances their innovation variances.

    Raises:
        InsufficientDataError: fewer than 4 steps.
        NumericalError: an innovation variance became non-positive or
            non-finite (message names the step).
    """
    if len(ds) < 4:
        raise InsufficientDataError("kalman_loglik needs at least 4 steps")
    u = ds.inputs()
    if not np.all(np.isfinite(u)) or not np.all(np.isfinite(ds.t_in)):
        raise ValidationError("dataset contains non-finite values")
    a, b, sigma = continuous_matrices(theta, printed_form=printed_form)
    a_d, b_d, q_d = _discretize_rc(a, b, sigma, float(ds.step_s))
    bu = u @ b_d.T
    ll, nu, s, bad = _kalman.filter_2state(
        a_d, q_d, bu, ds.t_in, theta.sigma_eps**2,
        float(theta.x0[0]), float(theta.x0[1]), float(theta.p0),
    )
    if bad >= 0:
        raise NumericalError(f"non-positive innovation variance at step {bad}")
    if not np.isfinite(ll):
        raise NumericalError("log-likelihood is non-finite")
    return float(ll), nu, s


@dataclass
class FitOptions:
    """Controls for the maximum-likelihood search."""

    n_restarts: int = 8
    bounds: dict = field(default_factory=lambda: dict(DEFAULT_BOUNDS))
    grad_tol: float = 1e-5        # BFGS gtol on the log-parameter gradient
    accept_grad: float = 0.05     # gradient inf-norm below which a fit counts as converged
    fd_step: float = 1e-5
    max_iter: int = 300
    seed: int = 0
    compute_covariance: bool = True


@dataclass
class Estimate:
    """Result of one maximum-likelihood calibration."""

    theta_ml: RcParameters
    covariance: np.ndarray          # over log-parameters, PARAM_NAMES order
    log_likelihood: float
    converged: bool
    n_restarts_used: int
    residuals: np.ndarray
    flags: dict = field(default_factory=dict)
    restart_table: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "theta": {p: getattr(self.theta_ml, p) for p in PARAM_NAMES},
            "x0": list(self.theta_ml.x0),
            "p0": self.theta_ml.p0,
            "covariance_log": self.covariance.tolist(),
            "log_likelihood": self.log_likelihood,
            "converged": self.converged,
            "n_restarts_used": self.n_restarts_used,
            "flags": self.flags,
            "restarts": self.restart_table,
        }


def _nll_factory(ds: SimDataset, x0, p0):
    u = ds.inputs()
    y = ds.t_in
    dt = float(ds.step_s)

    def nll(log_theta: np.ndarray) -> float:
        if not np.all(np.isfinite(log_theta)) or np.any(np.abs(log_theta) > 60):
            return 1e12
        with np.errstate(all="ignore"):
            vec = np.exp(log_theta)
            theta = RcParameters.from_vector(vec, x0=x0, p0=p0)
            a, b, sigma = continuous_matrices(theta)
            try:
                a_d, b_d, q_d = _discretize_rc(a, b, sigma, dt)
            except NumericalError:
                return 1e12
            bu = u @ b_d.T
            ll, _, _, bad = _kalman.filter_2state(
                a_d, q_d, bu, y, theta.sigma_eps**2, x0[0], x0[1], p0
            )
        if bad >= 0 or not np.isfinite(ll):
            return 1e12
        return -ll

    return nll


def central_gradient(f, x: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient with per-component relative steps."""
    g = np.empty_like(x)
    for i in range(x.size):
        h = step * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def finite_difference_hessian(f, x: np.ndarray, step: float = 1e-4) -> np.ndarray:
    """Symmetric central finite-difference Hessian."""
    n = x.size
    h = step * np.maximum(1.0, np.abs(x))
    hess = np.empty((n, n))
    f0 = f(x)
    for i in range(n):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h[i]
        xm[i] -= h[i]
        hess[i, i] = (f(xp) - 2.0 * f0 + f(xm)) / (h[i] * h[i])
        for j in range(i + 1, n):
            xpp = x.copy()
            xpm = x.copy()
            xmp = x.copy()
            xmm = x.copy()
            xpp[i] += h[i]; xpp[j] += h[j]
            xpm[i] += h[i]; xpm[j] -= h[j]
            xmp[i] -= h[i]; xmp[j] += h[j]
            xmm[i] -= h[i]; xmm[j] -= h[j]
            hess[i, j] = hess[j, i] = (
                f(xpp) - f(xpm) - f(xmp) + f(xmm)
            ) / (4.0 * h[i] * h[j])
    return 0.5 * (hess + hess.T)


def _initial_guess(ds: SimDataset, bounds: dict) -> np.ndarray:
    """Physics-informed starting point from a crude steady-state regression."""
    delta = ds.t_in - ds.t_out
    denom = float(delta @ delta)
    htc = float(ds.p_h @ delta / denom) if denom > 0 else 0.0
    if not np.isfinite(htc) or htc <= 1.0:
        r_tot = 5e-3
    else:
        r_tot = 1.0 / htc
    guess = {
        "r_o": 0.8 * r_tot,
        "r_i": 0.2 * r_tot,
        "c_w": 3e7,
        "c_i": 3e6,
        "a_w": 3.0,
        "sigma_w": 1e-3,
        "sigma_i": 1e-3,
        "sigma_eps": 0.15,
    }
    vec = np.array(
        [min(max(guess[p], bounds[p][0]), bounds[p][1]) for p in PARAM_NAMES]
    )
    return np.log(vec)


def fit_ml(ds: SimDataset, options: FitOptions | None = None) -> Estimate:
    """Maximum-likelihood calibration of the 2R2C model.

    Minimises the negative log-likelihood over log-parameters with BFGS
    (central finite-difference gradients), multi-started from a
    physics-informed guess plus log-uniform draws.  The best optimum is
    returned; the fit only counts as converged when the gradient norm meets
    the tolerance and near-optimal restarts agree on R_eq (a >10x spread
    flags a non-identifiable dataset).

    Raises:
        InsufficientDataError: dataset shorter than 48 steps.
        FitFailureError: every restart diverged (diagnostics attached).
    """
    if len(ds) < 48:
        raise InsufficientDataError(f"fit needs >= 48 steps, got {len(ds)}")
    options = options or FitOptions()
    x0 = (float(ds.t_in[0]), float(ds.t_in[0]))
    p0 = 1.0
    nll = _nll_factory(ds, x0, p0)
    jac = lambda x: central_gradient(nll, x, options.fd_step)  # noqa: E731

    rng = np.random.default_rng(np.random.SeedSequence(options.seed))
    lo = np.log([options.bounds[p][0] for p in PARAM_NAMES])
    hi = np.log([options.bounds[p][1] for p in PARAM_NAMES])

    starts = [_initial_guess(ds, options.bounds)]
    for _ in range(max(0, options.n_restarts - 1)):
        starts.append(lo + (hi - lo) * rng.random(len(PARAM_NAMES)))

    table = []
    best = None
    for idx, start in enumerate(starts):
        try:
            res = minimize(
                nll,
                start,
                jac=jac,
                method="BFGS",
                options={"gtol": options.grad_tol, "maxiter": options.max_iter},
            )
        except (FloatingPointError, OverflowError) as exc:
            table.append({"restart": idx, "status": f"error: {exc}", "nll": None})
            continue
        gnorm = float(np.max(np.abs(res.jac))) if res.jac is not None else np.inf
        entry = {
            "restart": idx,
            "status": res.message,
            "nll": float(res.fun),
            "grad_inf_norm": gnorm,
            "r_eq": float(np.exp(res.x[0]) + np.exp(res.x[1])),
        }
        table.append(entry)
        if not np.isfinite(res.fun) or res.fun >= 1e11:
            entry["status"] = "diverged"
            continue
        if best is None or res.fun < best[0].fun:
            best = (res, gnorm, idx)

    if best is None:
        raise FitFailureError("all optimisation restarts diverged", restarts=table)

    res, gnorm, best_idx = best
    converged = gnorm <= options.accept_grad
    flags = {"best_restart": best_idx, "grad_inf_norm": gnorm}

    # Identifiability guard: near-optimal restarts must agree on R_eq.
    near = [
        e["r_eq"]
        for e in table
        if e.get("nll") is not None and e["nll"] < 1e11 and e["nll"] <= res.fun + 2.0
    ]
    if near and max(near) / min(near) > 10.0:
        converged = False
        flags["ambiguous_r_eq"] = True

    theta = RcParameters.from_vector(np.exp(res.x), x0=x0, p0=p0)
    ll, residuals, _ = kalman_loglik(theta, ds)

    if options.compute_covariance:
        cov, cov_flags = estimate_covariance(theta, ds)
        flags.update(cov_flags)
    else:
        cov = np.full((len(PARAM_NAMES), len(PARAM_NAMES)), np.nan)

    return Estimate(
        theta_ml=theta,
        covariance=cov,
        log_likelihood=ll,
        converged=bool(converged),
        n_restarts_used=len(starts),
        residuals=residuals,
        flags=flags,
        restart_table=table,
    )


def estimate_covariance(theta: RcParameters, ds: SimDataset, step: float = 1e-4):
    """Covariance over log-parameters from the observed information matrix.

    Inverts the central finite-difference Hessian of the negative
    log-likelihood; the result is symmetrised and clipped to positive
    semi-definite.  Null (or negative-curvature) information directions get
    infinite marginal variances and are flagged.
    """
    nll = _nll_factory(ds, (float(ds.t_in[0]), float(ds.t_in[0])), theta.p0)
    x = np.log(theta.to_vector())
    hess = finite_difference_hessian(nll, x, step=step)
    lam, vec = np.linalg.eigh(hess)
    tol = 1e-10 * max(1.0, float(np.max(np.abs(lam))))
    good = lam > tol
    flags = {}
    if not np.all(good):
        flags["singular_information"] = True
    if np.any(lam < -tol):
        flags["negative_curvature"] = True
    inv = np.zeros_like(lam)
    inv[good] = 1.0 / lam[good]
    cov = (vec[:, good] * inv[good]) @ vec[:, good].T
    cov = 0.5 * (cov + cov.T)
    # Clip tiny negative eigenvalues introduced by round-off.
    cl, cv = np.linalg.eigh(cov)
    if np.any(cl < 0):
        flags["clipped"] = True
        cl = np.clip(cl, 0.0, None)
        cov = (cv * cl) @ cv.T
        cov = 0.5 * (cov + cov.T)
    if not np.all(good):
        null_load = (vec[:, ~good] ** 2).sum(axis=1)
        for i in np.nonzero(null_load > 1e-12)[0]:
            cov[i, i] = np.inf
    return cov, flags


# ---------------------------------------------------------------------------
# Synthetic data from the model itself (self-consistency experiments)
# ---------------------------------------------------------------------------


def generate_rc_dataset(
    theta: RcParameters,
    t_out: np.ndarray,
    i_sol: np.ndarray,
    t_set: np.ndarray,
    start: datetime,
    step_s: int,
    seed: int,
    gain: float = 800.0,
    max_power: float = 8000.0,
    measurement_noise: bool = True,
) -> SimDataset:
    """Closed-loop trajectory of the 2R2C model with proportional heating.

    Process noise enters through the exact discretised covariance; the
    observed indoor temperature carries N(0, sigma_eps) measurement noise
    when ``measurement_noise`` is set.  P_h is the applied (clean) command.
    """
    a, b, sigma = continuous_matrices(theta)
    a_d, b_d, q_d = discretize(a, b, sigma, float(step_s))
    # Cholesky with graceful zero-noise handling.
    jitter = 1e-30 * max(1.0, float(np.max(np.abs(q_d))))
    chol = np.linalg.cholesky(q_d + jitter * np.eye(2))
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    n = len(t_out)
    noise = rng.standard_normal((n, 2))
    x1, x2, p_h = _kalman.simulate_2state_controlled(
        a_d, b_d, chol, np.asarray(t_out, float), np.asarray(i_sol, float),
        np.asarray(t_set, float), gain, max_power,
        float(theta.x0[0]), float(theta.x0[1]), noise,
    )
    y = x2.copy()
    if measurement_noise:
        y = y + rng.normal(0.0, theta.sigma_eps, n)
    return SimDataset(
        start=start,
        step_s=step_s,
        t_in=y,
        t_out=np.asarray(t_out, float).copy(),
        i_sol=np.asarray(i_sol, float).copy(),
        p_h=p_h,
        noisy=measurement_noise,
        seed=seed,
        meta={"generator": "2r2c"},
    )


# ---------------------------------------------------------------------------
# First-order variant (model-selection demonstration only)
# ---------------------------------------------------------------------------

FIRST_ORDER_NAMES = ("r", "c", "a_w", "sigma", "sigma_eps")

FIRST_ORDER_BOUNDS = {
    "r": (1e-4, 1.0),
    "c": (1e5, 1e9),
    "a_w": (1e-1, 50.0),
    "sigma": (1e-6, 1.0),
    "sigma_eps": (1e-6, 1.0),
}


@dataclass
class FirstOrderFit:
    params: dict
    log_likelihood: float
    converged: bool
    residuals: np.ndarray


def _first_order_nll_factory(ds: SimDataset, x0: float, p0: float):
    u = ds.inputs()
    y = ds.t_in
    dt = float(ds.step_s)

    def nll(log_theta: np.ndarray) -> float:
        if not np.all(np.isfinite(log_theta)) or np.any(np.abs(log_theta) > 60):
            return 1e12
        with np.errstate(all="ignore"):
            r, c, a_w, sig, sig_eps = np.exp(log_theta)
            tau = 1.0 / (r * c)
            try:
                ad = math.exp(-tau * dt)
            except OverflowError:
                return 1e12
            # Exact ZOH integrals of the scalar system.
            gint = (1.0 - ad) / tau
            bd = np.array([gint / (r * c), gint * a_w / c, gint / c])
            qd = sig * sig * (1.0 - ad * ad) / (2.0 * tau)
            bu = u @ bd
            ll, _, _, bad = _kalman.filter_1state(ad, qd, bu, y, sig_eps**2, x0, p0)
        if bad >= 0 or not np.isfinite(ll):
            return 1e12
        return -ll

    return nll


def fit_first_order(ds: SimDataset, n_restarts: int = 4, seed: int = 0) -> FirstOrderFit:
    """Calibrate the first-order model; used to contrast residual whiteness."""
    if len(ds) < 48:
        raise InsufficientDataError(f"fit needs >= 48 steps, got {len(ds)}")
    x0 = float(ds.t_in[0])
    p0 = 1.0
    nll = _first_order_nll_factory(ds, x0, p0)
    jac = lambda x: central_gradient(nll, x)  # noqa: E731
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    lo = np.log([FIRST_ORDER_BOUNDS[p][0] for p in FIRST_ORDER_NAMES])
    hi = np.log([FIRST_ORDER_BOUNDS[p][1] for p in FIRST_ORDER_NAMES])
    starts = [np.log([5e-3, 5e6, 3.0, 1e-3, 0.15])]
    for _ in range(max(0, n_restarts - 1)):
        starts.append(lo + (hi - lo) * rng.random(len(FIRST_ORDER_NAMES)))
    best = None
    for start in starts:
        res = minimize(nll, start, jac=jac, method="BFGS",
                       options={"gtol": 1e-5, "maxiter": 300})
        if not np.isfinite(res.fun) or res.fun >= 1e11:
            continue
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise FitFailureError("first-order fit: all restarts diverged")
    r, c, a_w, sig, sig_eps = np.exp(best.x)
    # Recompute residuals at the optimum.
    u = ds.inputs()
    tau = 1.0 / (r * c)
    ad = math.exp(-tau * ds.step_s)
    gint = (1.0 - ad) / tau
    bd = np.array([gint / (r * c), gint * a_w / c, gint / c])
    qd = sig * sig * (1.0 - ad * ad) / (2.0 * tau)
    ll, nu, _, _ = _kalman.filter_1state(
        ad, qd, u @ bd, ds.t_in, sig_eps**2, x0, p0
    )
    return FirstOrderFit(
        params=dict(zip(FIRST_ORDER_NAMES, np.exp(best.x))),
        log_likelihood=float(ll),
        converged=bool(np.max(np.abs(best.jac)) <= 0.05),
        residuals=nu,
    )
