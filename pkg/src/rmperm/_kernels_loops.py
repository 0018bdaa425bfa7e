"""Loop kernels for the resampling hot path, compiled with numba.

Layout contract shared by all kernels: a pooled value vector is ordered
group-major, subject-major, occasion-minor, i.e. subject vectors are
contiguous. ``n_arr``/``t_arr`` hold the per-group subject and occasion
counts. Statistics return NaN when the studentizer is numerically zero
(degenerate resample); callers decide how to count those.

This module is only imported when the numba backend is selected; the
vectorized numpy equivalents live in ``_kernels_vec``.
"""

import numpy as np
from numba import njit

_EPS = 2.220446049250313e-16


@njit(cache=True)
def mean_and_sigma(values, n_arr, t_arr):
    """Group means stacked into one vector and the scaled covariance.

    Returns (mean, sigma) where mean has length T = sum(t_i) and sigma is the
    T x T block diagonal of (N / n_i) * Vhat_i with Vhat_i the unbiased
    sample covariance of group i.
    """
    a = n_arr.shape[0]
    total_dim = 0
    n_total = 0
    for i in range(a):
        total_dim += t_arr[i]
        n_total += n_arr[i]
    mean = np.zeros(total_dim)
    sigma = np.zeros((total_dim, total_dim))
    off_v = 0
    off_d = 0
    for i in range(a):
        ni = n_arr[i]
        ti = t_arr[i]
        blk = values[off_v:off_v + ni * ti].reshape(ni, ti)
        m = np.zeros(ti)
        for k in range(ni):
            for s in range(ti):
                m[s] += blk[k, s]
        for s in range(ti):
            m[s] /= ni
        scale = n_total / (ni * (ni - 1.0))
        for s in range(ti):
            for r in range(s, ti):
                acc = 0.0
                for k in range(ni):
                    acc += (blk[k, s] - m[s]) * (blk[k, r] - m[r])
                v = acc * scale
                sigma[off_d + s, off_d + r] = v
                sigma[off_d + r, off_d + s] = v
        for s in range(ti):
            mean[off_d + s] = m[s]
        off_v += ni * ti
        off_d += ti
    return mean, sigma


@njit(cache=True)
def wts_quadform(mean, sigma, h, n_total):
    """Wald-type quadratic form N * (H y)' (H sigma H')^+ (H y), or NaN."""
    r = h.shape[0]
    m = h @ sigma @ h.T
    tr = 0.0
    for j in range(r):
        tr += m[j, j]
    if not np.isfinite(tr) or tr <= 0.0:
        return np.nan
    w, vecs = np.linalg.eigh(m)
    wmax = w[r - 1]
    if not np.isfinite(wmax) or wmax <= 0.0:
        return np.nan
    cutoff = r * _EPS * wmax
    hy = h @ mean
    z = vecs.T @ hy
    q = 0.0
    for j in range(r):
        if w[j] > cutoff:
            q += z[j] * z[j] / w[j]
    return n_total * q


@njit(cache=True)
def ats_quantities(mean, sigma, tproj, n_total):
    """ANOVA-type ingredients (qtilde, tr1, tr2).

    qtilde = N * y' T y, tr1 = tr(T sigma), tr2 = tr((T sigma)^2); the scaled
    statistic is qtilde / tr1 and the Box degrees of freedom tr1^2 / tr2.
    Returns NaNs when tr1 is not positive.
    """
    d = tproj.shape[0]
    ts = tproj @ sigma
    tr1 = 0.0
    for j in range(d):
        tr1 += ts[j, j]
    if not np.isfinite(tr1) or tr1 <= 0.0:
        return np.nan, np.nan, np.nan
    tr2 = 0.0
    for i in range(d):
        for j in range(d):
            tr2 += ts[i, j] * ts[j, i]
    ty = tproj @ mean
    q = 0.0
    for j in range(d):
        q += mean[j] * ty[j]
    return n_total * q, tr1, tr2


@njit(cache=True)
def wts_single(values, n_arr, t_arr, h):
    n_total = 0
    for i in range(n_arr.shape[0]):
        n_total += n_arr[i]
    mean, sigma = mean_and_sigma(values, n_arr, t_arr)
    return wts_quadform(mean, sigma, h, n_total)


@njit(cache=True)
def ats_single(values, n_arr, t_arr, tproj):
    n_total = 0
    for i in range(n_arr.shape[0]):
        n_total += n_arr[i]
    mean, sigma = mean_and_sigma(values, n_arr, t_arr)
    return ats_quantities(mean, sigma, tproj, n_total)


@njit(cache=True)
def batch_wts_values(values2d, n_arr, t_arr, h):
    """Wald-type statistic for each row of a (b, N~) value matrix."""
    b = values2d.shape[0]
    n_total = 0
    for i in range(n_arr.shape[0]):
        n_total += n_arr[i]
    out = np.empty(b)
    for j in range(b):
        mean, sigma = mean_and_sigma(values2d[j], n_arr, t_arr)
        out[j] = wts_quadform(mean, sigma, h, n_total)
    return out


@njit(cache=True)
def batch_wts_gather(pooled, idx, n_arr, t_arr, h):
    """Wald-type statistic for each gather of the pooled vector.

    Row j of ``idx`` holds indices into ``pooled``: a permutation for the
    permutation test, or draws with replacement for the bootstrap.
    """
    b = idx.shape[0]
    m = pooled.shape[0]
    n_total = 0
    for i in range(n_arr.shape[0]):
        n_total += n_arr[i]
    out = np.empty(b)
    buf = np.empty(m)
    for j in range(b):
        for s in range(m):
            buf[s] = pooled[idx[j, s]]
        mean, sigma = mean_and_sigma(buf, n_arr, t_arr)
        out[j] = wts_quadform(mean, sigma, h, n_total)
    return out


@njit(cache=True)
def batch_ats_values(values2d, n_arr, t_arr, tproj):
    """Scaled ANOVA-type statistic qtilde / tr(T sigma) per row."""
    b = values2d.shape[0]
    n_total = 0
    for i in range(n_arr.shape[0]):
        n_total += n_arr[i]
    out = np.empty(b)
    for j in range(b):
        mean, sigma = mean_and_sigma(values2d[j], n_arr, t_arr)
        q, tr1, _ = ats_quantities(mean, sigma, tproj, n_total)
        out[j] = q / tr1
    return out


@njit(cache=True)
def batch_ats_gather(pooled, idx, n_arr, t_arr, tproj):
    b = idx.shape[0]
    m = pooled.shape[0]
    n_total = 0
    for i in range(n_arr.shape[0]):
        n_total += n_arr[i]
    out = np.empty(b)
    buf = np.empty(m)
    for j in range(b):
        for s in range(m):
            buf[s] = pooled[idx[j, s]]
        mean, sigma = mean_and_sigma(buf, n_arr, t_arr)
        q, tr1, _ = ats_quantities(mean, sigma, tproj, n_total)
        out[j] = q / tr1
    return out


@njit(cache=True)
def batch_mean_sigma_gather(pooled, idx, n_arr, t_arr):
    """Permuted mean vectors and scaled covariances for diagnostics."""
    b = idx.shape[0]
    m = pooled.shape[0]
    total_dim = 0
    for i in range(t_arr.shape[0]):
        total_dim += t_arr[i]
    means = np.empty((b, total_dim))
    sigmas = np.empty((b, total_dim, total_dim))
    buf = np.empty(m)
    for j in range(b):
        for s in range(m):
            buf[s] = pooled[idx[j, s]]
        mean, sigma = mean_and_sigma(buf, n_arr, t_arr)
        means[j] = mean
        sigmas[j] = sigma
    return means, sigmas
