"""numba-compiled kernels; same contracts as ``_numpy``."""

import math

import numpy as np
from numba import njit

_TWO_PI = 2.0 * math.pi
_LN2 = math.log(2.0)


@njit(cache=True)
def _wrap(a):
    return math.pi - ((math.pi - a) % _TWO_PI)


@njit(cache=True)
def _lse_row(terms, m_count, log_clutter):
    mx = log_clutter
    for j in range(m_count):
        if terms[j] > mx:
            mx = terms[j]
    if mx == -np.inf:
        return -np.inf
    s = 0.0
    for j in range(m_count):
        s += math.exp(terms[j] - mx)
    if log_clutter > -np.inf:
        s += math.exp(log_clutter - mx)
    return mx + math.log(s)


@njit(cache=True)
def camera_loglik(pos, z, inv_cov, log_coef, log_clutter):
    n = pos.shape[0]
    m = z.shape[0]
    out = np.empty(n)
    terms = np.empty(max(m, 1))
    for i in range(n):
        px = pos[i, 0]
        py = pos[i, 1]
        for j in range(m):
            dx = z[j, 0] - px
            dy = z[j, 1] - py
            q = inv_cov[j, 0] * dx * dx + 2.0 * inv_cov[j, 1] * dx * dy + inv_cov[j, 2] * dy * dy
            terms[j] = log_coef[j] - 0.5 * q
        out[i] = _lse_row(terms, m, log_clutter)
    return out


@njit(cache=True)
def _lidar_kernel(pos, sx, sy, z, ivr, ivb, log_coef, log_clutter):
    n = pos.shape[0]
    m = z.shape[0]
    out = np.empty(n)
    terms = np.empty(max(m, 1))
    dmin = np.inf
    for i in range(n):
        ex = pos[i, 0] - sx
        ey = pos[i, 1] - sy
        r = math.hypot(ex, ey)
        if r < dmin:
            dmin = r
        b = math.atan2(ey, ex)
        for j in range(m):
            dr = z[j, 0] - r
            db = _wrap(z[j, 1] - b)
            terms[j] = log_coef[j] - 0.5 * (dr * dr * ivr + db * db * ivb)
        out[i] = _lse_row(terms, m, log_clutter)
    return out, dmin


def lidar_loglik(pos, sensor, z, inv_var, log_coef, log_clutter):
    return _lidar_kernel(
        pos, float(sensor[0]), float(sensor[1]), z,
        float(inv_var[0]), float(inv_var[1]), log_coef, float(log_clutter),
    )


@njit(cache=True)
def systematic_indices(weights, u):
    n = weights.shape[0]
    c = np.cumsum(weights)
    total = c[n - 1]
    last = n - 1
    while weights[last] <= 0.0:
        last -= 1
    idx = np.empty(n, dtype=np.int64)
    j = 0
    for k in range(n):
        p = (k + u) / n
        while j < last and c[j] / total <= p:
            j += 1
        idx[k] = j
    return idx


@njit(cache=True)
def _lse(lw):
    mx = -np.inf
    for v in lw:
        if v > mx:
            mx = v
    if not math.isfinite(mx):
        return mx
    s = 0.0
    for v in lw:
        s += math.exp(v - mx)
    return mx + math.log(s)


def normalize_log_weights(lw):
    s = _lse(lw)
    if not math.isfinite(s):
        return lw, s
    return lw - s, s


@njit(cache=True)
def _entropy(lw):
    h = 0.0
    for v in lw:
        w = math.exp(v)
        if w > 0.0:
            h -= w * v
    return h / _LN2


def entropy_bits(lw):
    return float(_entropy(lw))


@njit(cache=True)
def cv_predict(states, accel, dt):
    n = states.shape[0]
    out = np.empty_like(states)
    h = 0.5 * dt * dt
    for i in range(n):
        ax = accel[i, 0]
        ay = accel[i, 1]
        out[i, 0] = states[i, 0] + (states[i, 2] * dt + h * ax)
        out[i, 1] = states[i, 1] + (states[i, 3] * dt + h * ay)
        out[i, 2] = states[i, 2] + dt * ax
        out[i, 3] = states[i, 3] + dt * ay
    return out
