"""Compiled Kalman-filter innovations for small time-invariant systems.

The recursions are unrolled on scalars so that the per-step cost stays in
the microsecond range; the ML fit evaluates these kernels thousands of
times.  Both kernels return ``(loglik, innovations, innovation_variances,
bad_step)`` where ``bad_step >= 0`` flags a non-positive or non-finite
innovation variance at that step.
"""

import numpy as np
from numba import njit

LOG_2PI = float(np.log(2.0 * np.pi))


@njit(cache=True)
def filter_2state(ad, qd, bu, y, r_var, x1_0, x2_0, p0):
    """Predict/update recursion for a 2-state system with y = x2 + noise."""
    a11 = ad[0, 0]
    a12 = ad[0, 1]
    a21 = ad[1, 0]
    a22 = ad[1, 1]
    q11 = qd[0, 0]
    q12 = qd[0, 1]
    q22 = qd[1, 1]
    n = y.shape[0]
    nu = np.empty(n)
    s_out = np.empty(n)
    x1 = x1_0
    x2 = x2_0
    p11 = p0
    p12 = 0.0
    p22 = p0
    ll = 0.0
    for k in range(n):
        s = p22 + r_var
        if not np.isfinite(s) or s <= 0.0:
            return np.nan, nu, s_out, k
        v = y[k] - x2
        ll += -0.5 * (LOG_2PI + np.log(s) + v * v / s)
        nu[k] = v
        s_out[k] = s
        k1 = p12 / s
        k2 = p22 / s
        x1 += k1 * v
        x2 += k2 * v
        p11 -= k1 * p12
        p12 -= k1 * p22
        p22 -= k2 * p22
        # time update
        x1n = a11 * x1 + a12 * x2 + bu[k, 0]
        x2n = a21 * x1 + a22 * x2 + bu[k, 1]
        t11 = a11 * p11 + a12 * p12
        t12 = a11 * p12 + a12 * p22
        t21 = a21 * p11 + a22 * p12
        t22 = a21 * p12 + a22 * p22
        p11 = t11 * a11 + t12 * a12 + q11
        p12 = t11 * a21 + t12 * a22 + q12
        p22 = t21 * a21 + t22 * a22 + q22
        x1 = x1n
        x2 = x2n
    return ll, nu, s_out, -1


@njit(cache=True)
def filter_1state(ad, qd, bu, y, r_var, x_0, p0):
    """Same recursion for the first-order model (y = x + noise)."""
    n = y.shape[0]
    nu = np.empty(n)
    s_out = np.empty(n)
    x = x_0
    p = p0
    ll = 0.0
    for k in range(n):
        s = p + r_var
        if not np.isfinite(s) or s <= 0.0:
            return np.nan, nu, s_out, k
        v = y[k] - x
        ll += -0.5 * (LOG_2PI + np.log(s) + v * v / s)
        nu[k] = v
        s_out[k] = s
        gain = p / s
        x += gain * v
        p -= gain * p
        x = ad * x + bu[k]
        p = ad * p * ad + qd
    return ll, nu, s_out, -1


@njit(cache=True)
def simulate_2state_controlled(ad, bd, chol_q, t_out, i_sol, t_set, gain, p_max,
                               x1_0, x2_0, noise):
    """Closed-loop trajectory of the 2-state model under proportional heating.

    ``noise`` holds pre-drawn standard normal pairs; process noise is
    ``chol_q @ noise[k]``.  Returns the states and the applied heating power.
    """
    n = t_out.shape[0]
    x1_arr = np.empty(n)
    x2_arr = np.empty(n)
    p_arr = np.empty(n)
    x1 = x1_0
    x2 = x2_0
    for k in range(n):
        p = gain * (t_set[k] - x2)
        if p < 0.0:
            p = 0.0
        elif p > p_max:
            p = p_max
        x1_arr[k] = x1
        x2_arr[k] = x2
        p_arr[k] = p
        w1 = chol_q[0, 0] * noise[k, 0]
        w2 = chol_q[1, 0] * noise[k, 0] + chol_q[1, 1] * noise[k, 1]
        x1n = ad[0, 0] * x1 + ad[0, 1] * x2 + bd[0, 0] * t_out[k] + bd[0, 1] * i_sol[k] + bd[0, 2] * p + w1
        x2n = ad[1, 0] * x1 + ad[1, 1] * x2 + bd[1, 0] * t_out[k] + bd[1, 1] * i_sol[k] + bd[1, 2] * p + w2
        x1 = x1n
        x2 = x2n
    return x1_arr, x2_arr, p_arr
