"""Pure-numpy reference kernels."""

import numpy as np

_LN2 = np.log(2.0)


def wrap_angle(a):
    """Wrap angles into (-pi, pi]."""
    return np.pi - np.mod(np.pi - a, 2.0 * np.pi)


def _mixture_logsumexp(terms, log_clutter):
    # terms: (N, M) per-candidate log terms
    n = terms.shape[0]
    if np.isfinite(log_clutter) or terms.shape[1] == 0:
        terms = np.concatenate([terms, np.full((n, 1), log_clutter)], axis=1)
    m = terms.max(axis=1)
    safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = safe + np.log(np.exp(terms - safe[:, None]).sum(axis=1))
    return np.where(np.isneginf(m), -np.inf, out)


def camera_loglik(pos, z, inv_cov, log_coef, log_clutter):
    """Per-particle log of the camera target/clutter mixture.

    inv_cov rows hold (a, b, c) of the symmetric inverse [[a, b], [b, c]];
    log_coef already includes log(alpha * cbar_j) and the Gaussian normalizer.
    """
    dx = z[None, :, 0] - pos[:, 0, None]
    dy = z[None, :, 1] - pos[:, 1, None]
    q = inv_cov[:, 0] * dx * dx + 2.0 * inv_cov[:, 1] * dx * dy + inv_cov[:, 2] * dy * dy
    return _mixture_logsumexp(log_coef[None, :] - 0.5 * q, log_clutter)


def lidar_loglik(pos, sensor, z, inv_var, log_coef, log_clutter):
    """Per-particle log of the range-bearing mixture.

    Returns (loglik, min_distance) where min_distance is the smallest
    particle-to-sensor distance, for the coincidence check.
    """
    ex = pos[:, 0] - sensor[0]
    ey = pos[:, 1] - sensor[1]
    rng = np.hypot(ex, ey)
    brg = np.arctan2(ey, ex)
    dr = z[None, :, 0] - rng[:, None]
    db = wrap_angle(z[None, :, 1] - brg[:, None])
    q = dr * dr * inv_var[0] + db * db * inv_var[1]
    ll = _mixture_logsumexp(log_coef[None, :] - 0.5 * q, log_clutter)
    return ll, float(rng.min()) if rng.size else np.inf


def systematic_indices(weights, u):
    """Systematic resampling with a single offset u in [0, 1).

    Pointer k sits at (k + u) / N on the normalized cumulative weights.
    """
    n = weights.shape[0]
    c = np.cumsum(weights)
    c = c / c[-1]
    pointers = (np.arange(n) + u) / n
    idx = np.searchsorted(c, pointers, side="right")
    last = np.flatnonzero(weights > 0)[-1]
    return np.minimum(idx, last)


def normalize_log_weights(lw):
    """Return (normalized log weights, log normalizer)."""
    m = lw.max()
    if not np.isfinite(m):
        return lw, -np.inf if np.isneginf(m) else np.nan
    s = m + np.log(np.exp(lw - m).sum())
    return lw - s, s


def entropy_bits(lw):
    """Shannon entropy (bits) of normalized log weights, 0 log 0 := 0."""
    w = np.exp(lw)
    mask = w > 0
    return float(-(w[mask] * lw[mask]).sum() / _LN2)


def cv_predict(states, accel, dt):
    """Constant-velocity step with acceleration kicks; returns a new array."""
    out = states.copy()
    out[:, :2] += out[:, 2:] * dt + 0.5 * dt * dt * accel
    out[:, 2:] += dt * accel
    return out
